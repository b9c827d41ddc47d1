//! Invariants over randomized symbols, inputs and parameters.

use std::sync::Arc;

use lieq_core::expmap::{self, make_cutoff, FlowOp, Profile};
use lieq_core::quantize::{adjoint, assemble_kernel, compose};
use lieq_core::symbols::{self, PolySymbol, Symbol};
use lieq_core::verify::{diff_operator_apply, random_bandlimited, sobolev_norm};
use lieq_core::{make_model, GridFunction, ModelGeometry, ModelKind, ModelParams, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind() -> impl Strategy<Value = ModelKind> {
    prop_oneof![Just(ModelKind::Circle), Just(ModelKind::BInterval), Just(ModelKind::ScLine)]
}

fn geometry(kind: ModelKind, n: usize) -> Arc<ModelGeometry> {
    make_model(kind, ModelParams::new(n, 6.0)).unwrap()
}

fn poly(coeffs: &[(f64, f64)]) -> Symbol {
    let cs: Vec<C64> = coeffs.iter().map(|&(a, b)| C64::new(a, b)).collect();
    Symbol::polynomial("p", PolySymbol::constant(&cs))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identity_on_random_bandlimited_input(kind in kind(), seed in any::<u64>()) {
        let g = geometry(kind, 64);
        let cut = make_cutoff(&g, expmap::default_cutoff_radius(&g), Profile::Smooth).unwrap();
        let p = assemble_kernel(&g, &symbols::one(), &cut).unwrap();
        let u = random_bandlimited(&g, 8, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(p.apply(&u).unwrap().max_diff(&u).unwrap() <= 1e-12);
    }

    #[test]
    fn constant_coefficient_polynomials_match_explicit_operator(
        kind in kind(),
        coeffs in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..=4),
        seed in any::<u64>(),
    ) {
        let g = geometry(kind, 128);
        let cut = make_cutoff(&g, 1.0, Profile::Smooth).unwrap();
        let sym = poly(&coeffs);
        let p = assemble_kernel(&g, &sym, &cut).unwrap();
        let u = random_bandlimited(&g, 6, &mut ChaCha8Rng::seed_from_u64(seed));
        let want = diff_operator_apply(&g, sym.poly().unwrap(), &u).unwrap();
        let scale = want.max_abs().max(1.0);
        prop_assert!(p.apply(&u).unwrap().max_diff(&want).unwrap() <= 1e-8 * scale);
    }

    #[test]
    fn quantization_is_linear(
        kind in kind(),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        m in -2.0..1.5f64,
    ) {
        let g = geometry(kind, 64);
        let cut = make_cutoff(&g, 1.0, Profile::Smooth).unwrap();
        let s1 = symbols::jbracket_pow(m);
        let s2 = symbols::gauss();
        let combo = s1.scale(C64::new(a, 0.0)).add(&s2.scale(C64::new(b, 0.0)));
        let lhs = assemble_kernel(&g, &combo, &cut).unwrap();
        let rhs = assemble_kernel(&g, &s1, &cut).unwrap().scale(C64::new(a, 0.0))
            .add(&assemble_kernel(&g, &s2, &cut).unwrap().scale(C64::new(b, 0.0))).unwrap();
        let gap = (lhs.kernel() - rhs.kernel()).camax();
        prop_assert!(gap <= 1e-10 * (1.0 + rhs.kernel().camax()), "gap {gap}");
    }

    #[test]
    fn adjoint_is_an_antilinear_involution(kind in kind(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let g = geometry(kind, 48);
        let cut = make_cutoff(&g, 1.0, Profile::Smooth).unwrap();
        let p = assemble_kernel(&g, &symbols::vector_field("w", move |s| 1.0 + 0.3 * (a * s).sin()), &cut).unwrap();
        let twice = adjoint(&adjoint(&p));
        prop_assert_eq!(twice.kernel(), p.kernel());
        let z = C64::new(a, b);
        let lhs = adjoint(&p.scale(z));
        let rhs = adjoint(&p).scale(z.conj());
        prop_assert!((lhs.kernel() - rhs.kernel()).camax() <= 1e-12 * (1.0 + p.kernel().camax()));
    }

    #[test]
    fn adjoint_reverses_products(kind in kind(), m in 0.0..2.0f64) {
        let g = geometry(kind, 48);
        let cut = make_cutoff(&g, 1.0, Profile::Smooth).unwrap();
        let p = assemble_kernel(&g, &symbols::jbracket_pow(m), &cut).unwrap();
        let q = assemble_kernel(&g, &symbols::vector_field("w", |s| 2.0 + s.cos()), &cut).unwrap();
        let lhs = adjoint(&compose(&p, &q).unwrap());
        let rhs = compose(&adjoint(&q), &adjoint(&p)).unwrap();
        prop_assert!((lhs.kernel() - rhs.kernel()).camax() <= 1e-10 * (1.0 + lhs.kernel().camax()));
    }

    #[test]
    fn flows_invert_on_the_circle(t in -1.0..1.0f64, seed in any::<u64>()) {
        let g = geometry(ModelKind::Circle, 64);
        let x = FlowOp::new(|s: f64| 0.3 + 0.5 * s.sin()).at_time(t);
        let u = random_bandlimited(&g, 4, &mut ChaCha8Rng::seed_from_u64(seed));
        let there = expmap::flow_apply(&g, &x, &u, 1e-10).unwrap().function;
        let back = expmap::flow_apply(&g, &x.negated(), &there, 1e-10).unwrap().function;
        prop_assert!(back.max_diff(&u).unwrap() <= 1e-7);
    }

    #[test]
    fn exp_point_is_additive_along_geodesics(kind in kind(), v in -1.5..1.5f64, w in -1.5..1.5f64) {
        let g = geometry(kind, 64);
        let x = g.unstraighten(0.3);
        let direct = expmap::exp_point(&g, x, v + w).unwrap();
        let two_step = expmap::exp_point(&g, expmap::exp_point(&g, x, v).unwrap(), w).unwrap();
        let (a, b) = (g.straighten(direct), g.straighten(two_step));
        prop_assert!((g.wrap(a - b)).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn sobolev_norm_is_monotone_in_s(kind in kind(), seed in any::<u64>(), s in -3.0..3.0f64, ds in 0.1..1.0f64) {
        let g = geometry(kind, 64);
        let u = random_bandlimited(&g, 10, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(sobolev_norm(&u, s) <= sobolev_norm(&u, s + ds) * (1.0 + 1e-12));
    }

    #[test]
    fn grid_functions_reject_foreign_grids(n in 16usize..64) {
        let g = geometry(ModelKind::Circle, n);
        let other = geometry(ModelKind::Circle, n + 1);
        let p = assemble_kernel(&g, &symbols::one(), &make_cutoff(&g, 1.0, Profile::Smooth).unwrap()).unwrap();
        let u = GridFunction::from_straight(other, |s| C64::new(s.cos(), 0.0));
        prop_assert!(p.apply(&u).is_err());
    }
}
