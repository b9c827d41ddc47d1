use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lieq_core::expmap::{make_cutoff, FlowOp, Profile};
use lieq_core::quantize::{assemble_kernel, compose, flow_operator, recover_symbol, RecoveryOptions};
use lieq_core::symbols;
use lieq_core::{make_model, GridFunction, ModelKind, ModelParams, C64};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_kernel");
    group.sample_size(10);
    for n in [128usize, 256, 512] {
        let g = make_model(ModelKind::ScLine, ModelParams::new(n, 10.0)).unwrap();
        let cut = make_cutoff(&g, 1.0, Profile::Smooth).unwrap();
        let sym = symbols::jbracket_pow(1.0);
        group.bench_with_input(BenchmarkId::new("jbracket", n), &n, |b, _| b.iter(|| assemble_kernel(&g, &sym, &cut).unwrap()));
        let poly = symbols::vector_field("w", |s| 1.0 + 0.3 * s.sin());
        group.bench_with_input(BenchmarkId::new("polynomial", n), &n, |b, _| b.iter(|| assemble_kernel(&g, &poly, &cut).unwrap()));
    }
    group.finish();
}

fn operations(c: &mut Criterion) {
    let g = make_model(ModelKind::BInterval, ModelParams::new(256, 6.0)).unwrap();
    let cut = make_cutoff(&g, 1.0, Profile::Smooth).unwrap();
    let p = assemble_kernel(&g, &symbols::jbracket_pow(1.0), &cut).unwrap();
    let q = assemble_kernel(&g, &symbols::xi(), &cut).unwrap();
    let u = GridFunction::from_straight(g.clone(), |s| C64::new((-s * s).exp(), 0.0));
    let mut group = c.benchmark_group("operators_n256");
    group.sample_size(10);
    group.bench_function("apply", |b| b.iter(|| p.apply(&u).unwrap()));
    group.bench_function("compose", |b| b.iter(|| compose(&p, &q).unwrap()));
    group.bench_function("recover_symbol", |b| b.iter(|| recover_symbol(&p, 0.5, 1.0, &RecoveryOptions::default()).unwrap()));
    let x = FlowOp::new(|s: f64| 0.4 + 0.2 * s.sin());
    group.bench_function("flow_operator", |b| b.iter(|| flow_operator(&g, &x, 1e-10).unwrap()));
    group.finish();
}

criterion_group!(benches, assembly, operations);
criterion_main!(benches);
