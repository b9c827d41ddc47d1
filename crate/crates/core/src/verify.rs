//! Property checks, brute-force oracles and the suite runner.
//!
//! Every check reports one nonnegative-or-signed measured quantity and
//! passes iff `measured < tolerance` (strictly) and its built-in negative
//! control, if any, behaves. Checks that need a particular resolution build
//! their own grid of the configured kind; the scale is recorded in the
//! report.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::expmap::{self, Cutoff, FlowOp, Profile};
use crate::extensions::{self, GroupGrid, ProductFunction, ProductOperator, SemiclassicalFamily, SuspendedOperator, SuspendedSymbol};
use crate::geometry::{anchor_apply, make_model, GridFunction, ModelGeometry, ModelKind, ModelParams};
use crate::quantize::{
    self, adjoint, assemble_kernel, assemble_kernel_with, conjugate_by_power, recover_symbol, DenseOperator, GridOperator,
    KernelMode, OperatorChain, QuantizeOptions, RecoveryOptions,
};
use crate::spectral;
use crate::symbols::{self, loglog_slope, poisson_bracket, PolySymbol, Symbol, SymbolClass};

type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Suite checks, in run order.
pub const CHECK_NAMES: [&str; 13] = [
    "identity",
    "vector_field",
    "weylq_oracle",
    "cutoff_independence",
    "composition",
    "commutator_poisson",
    "adjoint",
    "conjugation",
    "flow_conjugation",
    "diff_recovery",
    "sobolev",
    "suspended",
    "semiclassical",
];

/// Properties of the calculus, each of which some check must exercise.
pub const REQUIRED_PROPERTIES: [&str; 11] = [
    "power-conjugation",
    "flow-conjugation",
    "principal-symbol",
    "algebra-closure",
    "adjoint-closure",
    "sobolev-boundedness",
    "commutator-bracket",
    "vector-field-quantization",
    "differential-operators",
    "cutoff-independence",
    "face-preservation",
];

/// Properties exercised by a check.
pub fn check_properties(name: &str) -> &'static [&'static str] {
    match name {
        "identity" => &["principal-symbol"],
        "vector_field" => &["vector-field-quantization"],
        "weylq_oracle" => &["principal-symbol"],
        "cutoff_independence" => &["cutoff-independence"],
        "composition" => &["algebra-closure", "principal-symbol"],
        "commutator_poisson" => &["commutator-bracket"],
        "adjoint" => &["adjoint-closure"],
        "conjugation" => &["power-conjugation"],
        "flow_conjugation" => &["flow-conjugation", "face-preservation"],
        "diff_recovery" => &["differential-operators", "vector-field-quantization"],
        "sobolev" => &["sobolev-boundedness"],
        "suspended" => &["algebra-closure"],
        "semiclassical" => &["principal-symbol"],
        _ => &[],
    }
}

/// Default tolerance of a check.
pub fn default_tolerance(name: &str) -> f64 {
    match name {
        "identity" | "vector_field" => 1e-6,
        "weylq_oracle" => 1e-7,
        "cutoff_independence" => -3.0,
        "composition" | "flow_conjugation" => 2e-2,
        "commutator_poisson" => 5e-2,
        "adjoint" | "conjugation" => 1e-3,
        "diff_recovery" => 1e-4,
        "sobolev" => 0.1,
        "suspended" => 1e-10,
        "semiclassical" => 0.1,
        _ => 0.0,
    }
}

/// A named `(x, y)` series kept for plotting and raw-data CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub loglog: bool,
}

impl Series {
    fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>, loglog: bool) -> Self {
        Self {
            label: label.into(),
            x,
            y,
            loglog,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub geometry: ModelKind,
    pub n: usize,
    /// Window half-width `L`; 0 on the circle.
    pub window: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
    pub seed: u64,
    pub series: Vec<Series>,
    pub artifacts: Vec<PathBuf>,
}

/// Raw result of a check before its tolerance is applied.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub measured: f64,
    /// Negative controls and secondary requirements.
    pub extra_ok: bool,
    pub detail: String,
    pub series: Vec<Series>,
    /// Geometry the check actually ran on.
    pub kind: ModelKind,
    pub n: usize,
    pub window: f64,
}

/// Resolved suite parameters.
#[derive(Debug, Clone)]
pub struct SuiteContext {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub cutoff_r: Option<f64>,
    pub profile: Profile,
    pub flow_tol: f64,
    pub seed: u64,
    pub grid: (usize, f64),
    pub t_ladder: Vec<f64>,
}

impl SuiteContext {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            kind: cfg.geometry.kind,
            params: cfg.geometry.params(),
            cutoff_r: cfg.cutoff.r,
            profile: cfg.cutoff.profile,
            flow_tol: cfg.flow.tol,
            seed: cfg.seed,
            grid: (cfg.suspended.n_z, cfg.suspended.z_period),
            t_ladder: cfg.semiclassical.t_ladder.clone(),
        }
    }

    pub fn geometry(&self) -> Result<Arc<ModelGeometry>> {
        make_model(self.kind, self.params)
    }

    /// Same kind, resolution `n`, and window `L` on the lines.
    pub fn scaled(&self, n: usize, window: f64) -> Result<Arc<ModelGeometry>> {
        make_model(
            self.kind,
            ModelParams {
                n,
                window,
                scattering_c: self.params.scattering_c,
            },
        )
    }

    pub fn cutoff(&self, geom: &ModelGeometry) -> Result<Cutoff> {
        let r = self.cutoff_r.unwrap_or_else(|| expmap::default_cutoff_radius(geom));
        expmap::make_cutoff(geom, r, self.profile)
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

fn window_of(geom: &ModelGeometry) -> f64 {
    if geom.kind().is_compact() {
        0.0
    } else {
        geom.params().window
    }
}

// ---------------------------------------------------------------------------
// inputs and oracles

/// Seeded random bandlimited field: Gaussian coefficients on the lowest
/// `band` Fourier modes of the window, times a Gaussian envelope of width
/// `L/8` on the line models. Normalized to `max |u| = 1`.
pub fn random_bandlimited(geom: &Arc<ModelGeometry>, band: usize, rng: &mut impl Rng) -> GridFunction {
    let n = geom.n();
    let period = geom.period();
    let mut coeffs = Vec::with_capacity(2 * band + 1);
    for k in -(band as i64)..=band as i64 {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        coeffs.push((2.0 * PI * k as f64 / period, C64::new(a, b)));
    }
    let sigma = geom.params().window / 8.0;
    let mut values: Vec<C64> = geom
        .nodes()
        .iter()
        .map(|&s| {
            let wave: C64 = coeffs.iter().map(|&(w, c)| c * C64::from_polar(1.0, w * s)).sum();
            if geom.kind().is_compact() {
                wave
            } else {
                wave * (-s * s / (2.0 * sigma * sigma)).exp()
            }
        })
        .collect();
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    values.iter_mut().for_each(|v| *v /= peak);
    debug_assert_eq!(values.len(), n);
    GridFunction::new(geom.clone(), values).expect("grid length")
}

/// `Σ c_k(s) (−i)^k X^k u` with `X` applied by [`anchor_apply`].
pub fn diff_operator_apply(geom: &Arc<ModelGeometry>, poly: &PolySymbol, u: &GridFunction) -> Result<GridFunction> {
    let mut out = vec![C64::new(0.0, 0.0); geom.n()];
    let mut xk = u.clone();
    for k in 0..=poly.degree() {
        if k > 0 {
            xk = anchor_apply(geom, &xk)?;
        }
        let phase = (-I).powu(k as u32);
        for (i, &s) in geom.nodes().iter().enumerate() {
            out[i] += poly.coeff(k, s) * phase * xk.values()[i];
        }
    }
    GridFunction::new(geom.clone(), out)
}

/// Gauss–Legendre panel rule on `[a, b]`.
fn panel_rule(rule: &GaussLegendre, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 16);
    for p in 0..panels {
        let (lo, hi) = (a + p as f64 * width, a + (p + 1) as f64 * width);
        let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
        for (x, w) in rule.iter() {
            out.push((mid + half * x, half * w));
        }
    }
    out
}

fn legendre16() -> GaussLegendre {
    GaussLegendre::new(16.try_into().expect("nonzero"))
}

/// Kernel entry `K[i][j]` of the fiber integral by Gauss–Legendre panels,
/// with the same cutoff, taper and density as the FFT path.
pub fn oracle_kernel_entry(geom: &ModelGeometry, sym: &Symbol, cutoff: &Cutoff, i: usize, j: usize) -> C64 {
    let s = geom.nodes()[i];
    let d = geom.wrap(s - geom.nodes()[j]);
    let chi = cutoff.at_length(d);
    if chi == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let b = quantize::nyquist(geom);
    let tapered = !sym.is_smoothing();
    let (lo, hi) = if tapered { (-b, b) } else { (-b.min(40.0), b.min(40.0)) };
    let panels = ((hi - lo) / 0.5).ceil() as usize;
    let rule = legendre16();
    let sum: C64 = panel_rule(&rule, lo, hi, panels)
        .into_iter()
        .map(|(eta, w)| {
            let t = if tapered { quantize::taper(eta, b) } else { 1.0 };
            sym.eval(s, eta) * C64::from_polar(w * t, d * eta)
        })
        .sum();
    sum * chi / (2.0 * PI)
}

/// Quadrature parameters for [`oracle_weylq`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylqOptions {
    /// Truncation `|η| ≤ η_max` of the fiber integral.
    pub eta_max: f64,
    /// Panel width in `η` and in `s′`.
    pub panel: f64,
    /// Largest acceptable tail estimate.
    pub tol: f64,
}

impl Default for WeylqOptions {
    fn default() -> Self {
        Self {
            eta_max: 40.0,
            panel: 0.5,
            tol: 1e-6,
        }
    }
}

/// Euclidean Kohn–Nirenberg formula in the straightened chart,
///
/// `(2π)⁻¹ ∫∫ e^{i(s−s′)η} χ(s − s′) a(s, η) u(s′) dη ds′`,
///
/// by Gauss–Legendre panels in both variables (the `s′` integral inside),
/// evaluated at the grid nodes `nodes`.
pub fn oracle_weylq_at(
    geom: &ModelGeometry,
    sym: &Symbol,
    cutoff: &Cutoff,
    u: &dyn Fn(f64) -> C64,
    nodes: &[usize],
    opts: &WeylqOptions,
) -> Result<Vec<C64>> {
    let rule = legendre16();
    let r = cutoff.radius();
    let e = opts.eta_max;
    // s′ panels resolve e^{−is′η} up to |η| = E: at most a quarter period each
    let s_panels = ((2.0 * r) / opts.panel.min(PI / (2.0 * e))).ceil() as usize;
    let eta_panels = ((2.0 * e) / opts.panel.min(PI / (2.0 * r))).ceil() as usize;
    let etas = panel_rule(&rule, -e, e, eta_panels);
    let mut out = Vec::with_capacity(nodes.len());
    for &i in nodes {
        let s = geom.nodes()[i];
        let sp: Vec<(f64, C64)> = panel_rule(&rule, s - r, s + r, s_panels)
            .into_iter()
            .map(|(t, w)| (t, u(t) * (w * cutoff.at_length(s - t))))
            .collect();
        let mut total = C64::new(0.0, 0.0);
        let mut edge: f64 = 0.0;
        for &(eta, w) in &etas {
            // V(η) = ∫ e^{i(s−s′)η} χ(s−s′) u(s′) ds′
            let v: C64 = sp.iter().map(|&(t, cu)| cu * C64::from_polar(1.0, (s - t) * eta)).sum();
            let term = sym.eval(s, eta) * v;
            if eta.abs() >= 0.9 * e {
                edge = edge.max(term.norm());
            }
            total += term * w;
        }
        let tail = edge * 0.2 * e / (2.0 * PI);
        if tail > opts.tol {
            return Err(Error::QuadratureTail { tail, tol: opts.tol });
        }
        out.push(total / (2.0 * PI));
    }
    Ok(out)
}

/// [`oracle_weylq_at`] on every node.
pub fn oracle_weylq(
    geom: &Arc<ModelGeometry>,
    sym: &Symbol,
    cutoff: &Cutoff,
    u: &dyn Fn(f64) -> C64,
    opts: &WeylqOptions,
) -> Result<GridFunction> {
    let all: Vec<usize> = (0..geom.n()).collect();
    GridFunction::new(geom.clone(), oracle_weylq_at(geom, sym, cutoff, u, &all, opts)?)
}

// ---------------------------------------------------------------------------
// Sobolev estimates

/// `‖u‖_{H^s}` realized spectrally on the straightened window.
pub fn sobolev_norm(u: &GridFunction, s: f64) -> f64 {
    spectral::sobolev_norm(u.values(), u.geometry().period(), s)
}

/// `max ‖Pu‖_{H^{s−m}} / ‖u‖_{H^s}` over seeded random inputs with `N/4` modes.
pub fn estimate_sobolev_bound(p: &dyn GridOperator, s: f64, m: f64, trials: usize, seed: u64) -> Result<f64> {
    let geom = p.geometry().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = (geom.n() / 4).max(1);
    let mut best: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let u = random_bandlimited(&geom, band, &mut rng);
        let pu = GridFunction::new(geom.clone(), p.apply_values(u.values()))?;
        best = best.max(sobolev_norm(&pu, s - m) / sobolev_norm(&u, s));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevLadder {
    pub ns: Vec<usize>,
    pub estimates: Vec<f64>,
    /// `(max − min) / min` over the ladder.
    pub spread: f64,
    /// Slope of `log estimate` against `log N`.
    pub growth: f64,
}

/// Bound estimates of `build(geom)` across a resolution ladder.
pub fn sobolev_ladder(
    ctx: &SuiteContext,
    ns: &[usize],
    s: f64,
    m: f64,
    trials: usize,
    build: &dyn Fn(&Arc<ModelGeometry>) -> Result<DenseOperator>,
) -> Result<SobolevLadder> {
    let mut estimates = Vec::with_capacity(ns.len());
    for &n in ns {
        let geom = ctx.scaled(n, ctx.params.window)?;
        let p = build(&geom)?;
        estimates.push(estimate_sobolev_bound(&p, s, m, trials, ctx.seed ^ n as u64)?);
    }
    let lo = estimates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = estimates.iter().copied().fold(0.0, f64::max);
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    Ok(SobolevLadder {
        ns: ns.to_vec(),
        spread: (hi - lo) / lo,
        growth: loglog_slope(&xs, &estimates),
        estimates,
    })
}

// ---------------------------------------------------------------------------
// decay of cutoff differences

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
}

/// `‖(P₁ − P₂) e_λ‖₂ / ‖e_λ‖₂` for `e_λ = e^{iλs}φ`, and its log–log slope.
pub fn difference_decay(p1: &DenseOperator, p2: &DenseOperator, lambdas: &[f64], width: f64) -> Result<DecayFit> {
    let d = p1.sub(p2)?;
    let geom = d.geometry().clone();
    let center = if geom.kind().is_compact() { PI } else { 0.0 };
    let phi = quantize::bump(&geom, center, width);
    let mut norms = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let e: Vec<C64> = geom
            .nodes()
            .iter()
            .zip(&phi)
            .map(|(&s, &f)| C64::from_polar(f, l * s))
            .collect();
        let e = GridFunction::new(geom.clone(), e)?;
        let de = d.apply(&e)?;
        norms.push(de.norm_l2() / e.norm_l2());
    }
    Ok(DecayFit {
        slope: loglog_slope(lambdas, &norms),
        lambdas: lambdas.to_vec(),
        norms,
    })
}

// ---------------------------------------------------------------------------
// commutators

/// `[P, Q]` applied factor by factor, without forming `PQ`.
pub struct Commutator {
    p: Arc<dyn GridOperator>,
    q: Arc<dyn GridOperator>,
}

impl Commutator {
    pub fn new(p: Arc<dyn GridOperator>, q: Arc<dyn GridOperator>) -> Self {
        Self { p, q }
    }
}

impl GridOperator for Commutator {
    fn geometry(&self) -> &Arc<ModelGeometry> {
        self.p.geometry()
    }

    fn order(&self) -> f64 {
        self.p.order() + self.q.order() - 1.0
    }

    fn apply_values(&self, u: &[C64]) -> Vec<C64> {
        let pq = self.p.apply_values(&self.q.apply_values(u));
        let qp = self.q.apply_values(&self.p.apply_values(u));
        pq.iter().zip(&qp).map(|(a, b)| a - b).collect()
    }

    fn apply_at(&self, i: usize, u: &[C64]) -> C64 {
        self.p.apply_at(i, &self.q.apply_values(u)) - self.q.apply_at(i, &self.p.apply_values(u))
    }

    fn label(&self) -> String {
        format!("[{}, {}]", self.p.label(), self.q.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaCalibration {
    /// Measured `σ([P, Q]) / {σP, σQ}`.
    pub raw: C64,
    /// Nearest of `1, i, −i, −1`.
    pub kappa: C64,
}

/// Fixes `κ` in `σ([P, Q]) = κ {σP, σQ}` with `a = ξ`, `b = sin` on the circle.
pub fn calibrate_kappa() -> Result<KappaCalibration> {
    let geom = make_model(ModelKind::Circle, ModelParams::new(512, 1.0))?;
    let cutoff = expmap::make_cutoff(&geom, 1.0, Profile::Smooth)?;
    let a = symbols::xi();
    let b = symbols::multiplication("sin", |s| re(s.sin()));
    let p: Arc<dyn GridOperator> = Arc::new(assemble_kernel(&geom, &a, &cutoff)?);
    let q: Arc<dyn GridOperator> = Arc::new(assemble_kernel(&geom, &b, &cutoff)?);
    let c = Commutator::new(p, q);
    let x = 1.0;
    let est = recover_symbol(&c, x, 1.0, &RecoveryOptions::ladder(&[16.0, 32.0, 64.0]))?;
    let pb = poisson_bracket(&a, &b).eval(est.node, 1.0);
    let raw = est.value / pb;
    let kappa = [re(1.0), I, -I, re(-1.0)]
        .into_iter()
        .min_by(|u, v| (raw - u).norm().total_cmp(&(raw - v).norm()))
        .expect("non-empty");
    Ok(KappaCalibration { raw, kappa })
}

// ---------------------------------------------------------------------------
// checks

/// Scale used by checks that recover symbols on the line models.
const LINE_WINDOW: f64 = 4.0;

fn coefficient(kind: ModelKind, k: usize) -> impl Fn(f64) -> f64 + Send + Sync + Copy + 'static {
    // bounded, smooth, periodic on the circle
    let _ = kind;
    move |s: f64| match k {
        0 => 1.0 + 0.3 * s.sin(),
        1 => 0.5 + 0.25 * (s + 0.4).cos(),
        2 => 0.2 * (2.0 * s).sin(),
        _ => 0.7 + 0.2 * s.cos(),
    }
}

fn sample_points(geom: &ModelGeometry) -> Vec<f64> {
    let s = if geom.kind().is_compact() {
        vec![1.0, 2.5, 4.0]
    } else {
        vec![-1.0, 0.0, 0.8]
    };
    s.into_iter().map(|t| geom.unstraighten(t)).collect()
}

fn check_identity(ctx: &SuiteContext) -> Result<Outcome> {
    let geom = ctx.geometry()?;
    let p = assemble_kernel(&geom, &symbols::one(), &ctx.cutoff(&geom)?)?;
    let mut rng = ctx.rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let u = random_bandlimited(&geom, 8, &mut rng);
        worst = worst.max(p.apply(&u)?.max_diff(&u)?);
    }
    Ok(Outcome {
        measured: worst,
        extra_ok: true,
        detail: format!("max |Pu − u| over 4 bandlimited inputs; path={}", p.provenance().path),
        series: vec![],
        kind: geom.kind(),
        n: geom.n(),
        window: window_of(&geom),
    })
}

fn check_vector_field(ctx: &SuiteContext) -> Result<Outcome> {
    let geom = ctx.geometry()?;
    let cutoff = ctx.cutoff(&geom)?;
    let mut rng = ctx.rng(2);
    let mut worst: f64 = 0.0;
    let fields: [(&str, Symbol); 2] = [
        ("frame", symbols::xi()),
        ("w·frame", symbols::vector_field("w", coefficient(ctx.kind, 0))),
    ];
    for (k, (_, sym)) in fields.iter().enumerate() {
        let p = assemble_kernel(&geom, sym, &cutoff)?;
        let w = coefficient(ctx.kind, 0);
        for _ in 0..3 {
            let u = random_bandlimited(&geom, 8, &mut rng);
            let xu = anchor_apply(&geom, &u)?;
            let expect: Vec<C64> = xu
                .values()
                .iter()
                .zip(geom.nodes())
                .map(|(v, &s)| -I * v * if k == 0 { 1.0 } else { w(s) })
                .collect();
            let expect = GridFunction::new(geom.clone(), expect)?;
            worst = worst.max(p.apply(&u)?.max_diff(&expect)?);
        }
    }
    Ok(Outcome {
        measured: worst,
        extra_ok: true,
        detail: "max |a_X(D)u + i·Xu| for X = frame and X = w·frame".into(),
        series: vec![],
        kind: geom.kind(),
        n: geom.n(),
        window: window_of(&geom),
    })
}

/// Max gap between FFT-path kernel entries and the Gauss–Legendre oracle
/// over every entry inside the cutoff support, for `sym`.
pub fn kernel_oracle_gap(geom: &Arc<ModelGeometry>, sym: &Symbol, cutoff: &Cutoff) -> Result<f64> {
    let opts = QuantizeOptions {
        mode: KernelMode::Oscillatory,
        ..QuantizeOptions::default()
    };
    let p = assemble_kernel_with(geom, sym, cutoff, &opts)?;
    let n = geom.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = geom.wrap(geom.nodes()[i] - geom.nodes()[j]);
            if d.abs() >= cutoff.radius() {
                continue;
            }
            let o = oracle_kernel_entry(geom, sym, cutoff, i, j);
            worst = worst.max((p.kernel()[(i, j)] - o).norm());
        }
    }
    Ok(worst)
}

fn check_weylq(ctx: &SuiteContext) -> Result<Outcome> {
    let geom = ctx.geometry()?;
    let cutoff = ctx.cutoff(&geom)?;
    let syms = [symbols::gauss(), symbols::jbracket_pow(-2.0), symbols::xi()];
    let mut gaps = Vec::new();
    for sym in &syms {
        gaps.push(kernel_oracle_gap(&geom, sym, &cutoff)?);
    }
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    Ok(Outcome {
        measured: worst,
        extra_ok: true,
        detail: format!(
            "max kernel-entry gap vs Gauss–Legendre: gauss {:.3e}, <ξ>^-2 {:.3e}, ξ {:.3e}",
            gaps[0], gaps[1], gaps[2]
        ),
        series: vec![],
        kind: geom.kind(),
        n: geom.n(),
        window: window_of(&geom),
    })
}

/// Decay of `a_{χ₁}(D) − a_{χ₂}(D)` for `⟨ξ⟩`, with two smooth cutoffs and
/// with a tent-profile control.
pub fn cutoff_independence(ctx: &SuiteContext) -> Result<(DecayFit, DecayFit, Arc<ModelGeometry>)> {
    let geom = ctx.scaled(1024, LINE_WINDOW)?;
    let sym = symbols::jbracket_pow(1.0);
    let lambdas = [8.0, 16.0, 32.0, 64.0];
    let c1 = expmap::make_cutoff(&geom, 2.0, Profile::Smooth)?;
    let c2 = expmap::make_cutoff(&geom, 3.0, Profile::Smooth)?;
    let tent = c1.with_profile(Profile::Tent);
    let p1 = assemble_kernel(&geom, &sym, &c1)?;
    let p2 = assemble_kernel(&geom, &sym, &c2)?;
    let pt = assemble_kernel(&geom, &sym, &tent)?;
    let smooth = difference_decay(&p1, &p2, &lambdas, 0.6)?;
    let control = difference_decay(&p1, &pt, &lambdas, 0.6)?;
    Ok((smooth, control, geom))
}

fn check_cutoff_independence(ctx: &SuiteContext) -> Result<Outcome> {
    let (smooth, control, geom) = cutoff_independence(ctx)?;
    Ok(Outcome {
        measured: smooth.slope,
        extra_ok: control.slope >= -1.0,
        detail: format!(
            "decay slope {:.3} (smooth r=2 vs r=3); tent-profile control slope {:.3} (needs ≥ −1)",
            smooth.slope, control.slope
        ),
        series: vec![
            Series::new("smooth", smooth.lambdas.clone(), smooth.norms.clone(), true),
            Series::new("tent control", control.lambdas.clone(), control.norms.clone(), true),
        ],
        kind: geom.kind(),
        n: geom.n(),
        window: window_of(&geom),
    })
}

/// Recovery scale: `N = 512`, `L = 4`, `λ ∈ {16, 32, 64}`.
fn recovery_geometry(ctx: &SuiteContext) -> Result<Arc<ModelGeometry>> {
    ctx.scaled(512, LINE_WINDOW)
}

fn recovery_ladder() -> RecoveryOptions {
    RecoveryOptions::ladder(&[16.0, 32.0, 64.0])
}

fn relative_gap(got: C64, want: C64) -> f64 {
    (got - want).norm() / want.norm().max(1e-12)
}

fn order_one(name: &str, lead: impl Fn(f64) -> f64 + Send + Sync + 'static, low: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Symbol {
    Symbol::polynomial(
        name,
        PolySymbol::new(vec![Arc::new(move |s| re(low(s))), Arc::new(move |s| re(lead(s)))]),
    )
}

/// Composition symbol law for two first-order polynomial symbols.
pub fn composition_gap(ctx: &SuiteContext) -> Result<(f64, Arc<ModelGeometry>, Vec<Series>)> {
    let geom = recovery_geometry(ctx)?;
    let cutoff = ctx.cutoff(&geom)?;
    let a = order_one("a", coefficient(ctx.kind, 0), coefficient(ctx.kind, 2));
    let b = order_one("b", coefficient(ctx.kind, 1), coefficient(ctx.kind, 3));
    let p = assemble_kernel(&geom, &a, &cutoff)?;
    let q = assemble_kernel(&geom, &b, &cutoff)?;
    let pq = quantize::compose(&p, &q)?;
    let (a0, b0) = (symbols::principal_symbol(&a)?, symbols::principal_symbol(&b)?);
    let mut worst: f64 = 0.0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for x in sample_points(&geom) {
        for xi in [-2.0, -1.0, 1.0, 2.0] {
            let est = recover_symbol(&pq, x, xi, &recovery_ladder())?;
            let want = a0.eval(est.node, xi) * b0.eval(est.node, xi);
            let gap = relative_gap(est.value, want);
            worst = worst.max(gap);
            xs.push(xi);
            ys.push(gap);
        }
    }
    Ok((worst, geom, vec![Series::new("relative gap vs ξ", xs, ys, false)]))
}

fn check_composition(ctx: &SuiteContext) -> Result<Outcome> {
    let (worst, geom, series) = composition_gap(ctx)?;
    Ok(Outcome {
        measured: worst,
        extra_ok: true,
        detail: "relative gap between σ(PQ) and σ(P)σ(Q) at ξ ∈ {±1, ±2}".into(),
        series,
        kind: geom.kind(),
        n: geom.n(),
        window: window_of(&geom),
    })
}

/// Symbol pairs for the commutator check.
pub fn commutator_pairs(kind: ModelKind) -> Vec<(Symbol, Symbol)> {
    let f = move |k| coefficient(kind, k);
    vec![
        (symbols::xi(), symbols::multiplication("f", move |s| re(f(0)(s)))),
        (symbols::vector_field("v", f(0)), symbols::vector_field("w", f(1))),
        (symbols::jbracket_pow(2.0), symbols::multiplication("g", move |s| re(f(3)(s)))),
        (order_one("a", f(1), f(2)), symbols::jbracket_pow(2.0)),
        (
            symbols::vector_field("v", f(3)),
            Symbol::polynomial(
                "q",
                PolySymbol::new(vec![
                    Arc::new(move |s| re(f(2)(s))),
                    Arc::new(|_| re(0.0)),
                    Arc::new(move |s| re(f(0)(s))),
                ]),
            ),
        ),
    ]
}

/// Max relative gap between `σ([P, Q])` and `κ{σP, σQ}` over the pairs.
pub fn commutator_gap(ctx: &SuiteContext, kappa: C64) -> Result<(f64, Arc<ModelGeometry>, Vec<f64>)> {
    let geom = recovery_geometry(ctx)?;
    let cutoff = ctx.cutoff(&geom)?;
    let mut per_pair = Vec::new();
    for (a, b) in commutator_pairs(ctx.kind) {
        let p: Arc<dyn GridOperator> = Arc::new(assemble_kernel(&geom, &a, &cutoff)?);
        let q: Arc<dyn GridOperator> = Arc::new(assemble_kernel(&geom, &b, &cutoff)?);
        let c = Commutator::new(p, q);
        let pb = poisson_bracket(&symbols::principal_symbol(&a)?, &symbols::principal_symbol(&b)?);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        let mut gaps = Vec::new();
        for x in sample_points(&geom) {
            for xi in [1.0, 2.0] {
                let est = recover_symbol(&c, x, xi, &recovery_ladder())?;
                let want = kappa * pb.eval(est.node, xi);
                scale = scale.max(want.norm());
                gaps.push((est.value - want).norm());
            }
        }
        for g in gaps {
            worst = worst.max(g / scale.max(1e-12));
        }
        per_pair.push(worst);
    }
    let worst = per_pair.iter().copied().fold(0.0, f64::max);
    Ok((worst, geom, per_pair))
}

fn check_commutator(ctx: &SuiteContext) -> Result<Outcome> {
    let cal = calibrate_kappa()?;
    let (worst, geom, per_pair) = commutator_gap(ctx, cal.kappa)?;
    Ok(Outcome {
        measured: worst,
        extra_ok: (cal.raw - cal.kappa).norm() < 5e-2,
        detail: format!(
            "κ = {} (raw {:.6}{:+.6}i); per-pair relative gaps {:?}",
            cal.kappa, cal.raw.re, cal.raw.im, per_pair
        ),
        series: vec![Series::new(
            "relative gap per pair",
            (1..=per_pair.len()).map(|k| k as f64).collect(),
            per_pair,
            false,
        )],
        kind: geom.kind(),
        n: geom.n(),
        window: window_of(&geom),
    })
}

fn check_adjoint(ctx: &SuiteContext) -> Result<Outcome> {
    let geom = recovery_geometry(ctx)?;
    let cutoff = ctx.cutoff(&geom)?;
    let p = assemble_kernel(&geom, &symbols::vector_field("w", coefficient(ctx.kind, 0)), &cutoff)?;
    let twice_exact = adjoint(&adjoint(&p)).kernel() == p.kernel();
    let diff = adjoint(&p).sub(&p)?;
    let mut worst: f64 = 0.0;
    for x in sample_points(&geom) {
        for xi in [1.0, 2.0] {
            let est = recover_symbol(&diff, x, xi, &recovery_ladder().with_order(1.0))?;
            worst = worst.max(est.value.norm() / symbols::jbracket(xi));
        }
    }
    Ok(Outcome {
        measured: worst,
        extra_ok: twice_exact,
        detail: format!("max |σ₁(P* − P)| / ⟨ξ⟩; P** = P exactly: {twice_exact}"),
        series: vec![],
        kind: geom.kind(),
        n: geom.n(),
        window: window_of(&geom),
    })
}

/// `∂_s log x_H` for the first boundary face.
fn log_bdf_derivative(geom: &ModelGeometry, s: f64) -> f64 {
    let x = geom.unstraighten(s);
    match geom.kind() {
        ModelKind::BInterval => 1.0 - x,
        ModelKind::ScLine => geom.params().scattering_c * (1.0 - x),
        ModelKind::Circle => 0.0,
    }
}

/// Conjugation by `x_H^σ` of `a_X(D)`: returns the worst gap of the
/// order-0 part against `iσ ∂_s log x_H` and of the order-1 part against `ξ`.
pub fn conjugation_gaps(ctx: &SuiteContext, powers: &[C64]) -> Result<(f64, f64, Arc<ModelGeometry>)> {
    let kind = if ctx.kind.is_compact() { ModelKind::BInterval } else { ctx.kind };
    let local = SuiteContext { kind, ..ctx.clone() };
    let geom = recovery_geometry(&local)?;
    let cutoff = local.cutoff(&geom)?;
    let p = assemble_kernel(&geom, &symbols::xi(), &cutoff)?;
    let (mut low, mut top): (f64, f64) = (0.0, 0.0);
    for &sigma in powers {
        let q = conjugate_by_power(&p, sigma)?;
        let lower = q.sub(&p)?.with_order(0.0);
        for x in sample_points(&geom) {
            let est = recover_symbol(&lower, x, 1.0, &recovery_ladder())?;
            let want = I * sigma * log_bdf_derivative(&geom, est.node);
            low = low.max((est.value - want).norm());
            let lead = recover_symbol(&q, x, 1.0, &recovery_ladder())?;
            top = top.max((lead.value - 1.0).norm());
        }
    }
    Ok((low, top, geom))
}

fn check_conjugation(ctx: &SuiteContext) -> Result<Outcome> {
    let powers = [re(1.0), re(-1.0), re(2.0), re(-2.0), I];
    let (low, top, geom) = conjugation_gaps(ctx, &powers)?;
    Ok(Outcome {
        measured: low,
        extra_ok: top < 1e-3,
        detail: format!(
            "σ ∈ {{±1, ±2, i}}: order-0 gap vs iσ∂log x_H {low:.3e}; order-1 gap vs ξ {top:.3e} on {}",
            geom.kind()
        ),
        series: vec![],
        kind: geom.kind(),
        n: geom.n(),
        window: window_of(&geom),
    })
}

/// `ψ_X a_Y(D) ψ_X⁻¹` against the transported symbol `w(F(s))ξ/F′(s)`.
pub fn flow_conjugation_gap(ctx: &SuiteContext) -> Result<(f64, bool, Arc<ModelGeometry>)> {
    let (geom, ladder) = if ctx.kind.is_compact() {
        (ctx.scaled(512, LINE_WINDOW)?, RecoveryOptions::ladder(&[16.0, 32.0, 64.0]))
    } else {
        (ctx.scaled(1024, LINE_WINDOW)?, RecoveryOptions::ladder(&[8.0, 16.0, 32.0]))
    };
    let cutoff = ctx.cutoff(&geom)?;
    let f = |s: f64| 0.4 + 0.2 * s.sin();
    let w = coefficient(ctx.kind, 1);
    let x = FlowOp::new(f);
    let fwd = quantize::flow_operator(&geom, &x, ctx.flow_tol)?;
    let back = quantize::flow_operator(&geom, &x.negated(), ctx.flow_tol)?;
    let p = assemble_kernel(&geom, &symbols::vector_field("w", w), &cutoff)?;
    let chain = OperatorChain::new(vec![Arc::new(fwd), Arc::new(p), Arc::new(back)])?;
    // faces are preserved: every flowed node stays interior
    let images = expmap::flow_nodes(&geom, &x, ctx.flow_tol)?;
    let interior = images.images.iter().all(|&s| geom.bdf_at(s).iter().all(|&b| b > 0.0));
    let mut worst: f64 = 0.0;
    for pt in sample_points(&geom) {
        for xi in [1.0, -1.5] {
            let est = recover_symbol(&chain, pt, xi, &ladder)?;
            let big_f = x.flow_point(est.node, ctx.flow_tol)?;
            let dfds = f(big_f) / f(est.node);
            let want = re(w(big_f) * xi / dfds);
            worst = worst.max(relative_gap(est.value, want));
        }
    }
    Ok((worst, interior, geom))
}

fn check_flow_conjugation(ctx: &SuiteContext) -> Result<Outcome> {
    let (worst, interior, geom) = flow_conjugation_gap(ctx)?;
    Ok(Outcome {
        measured: worst,
        extra_ok: interior,
        detail: format!("relative gap vs transported symbol; flowed nodes interior: {interior}"),
        series: vec![],
        kind: geom.kind(),
        n: geom.n(),
        window: window_of(&geom),
    })
}

/// Polynomial symbols of degree ≤ 3 used by the Diff check.
pub fn diff_symbols(kind: ModelKind) -> Vec<Symbol> {
    let f = move |k| coefficient(kind, k);
    let c = |k: usize| -> symbols::Coeff { Arc::new(move |s| re(f(k)(s))) };
    vec![
        symbols::one(),
        symbols::xi(),
        symbols::vector_field("w", f(0)),
        Symbol::polynomial("deg2", PolySymbol::new(vec![c(2), c(1), c(0)])),
        Symbol::polynomial("deg3", PolySymbol::new(vec![c(3), c(2), c(1), c(0)])),
        Symbol::polynomial("complex", PolySymbol::new(vec![Arc::new(move |s| I * f(2)(s)), c(3), Arc::new(|_| I)])),
    ]
}

fn check_diff(ctx: &SuiteContext) -> Result<Outcome> {
    let geom = ctx.geometry()?;
    let cutoff = ctx.cutoff(&geom)?;
    let mut rng = ctx.rng(9);
    let mut worst: f64 = 0.0;
    let mut leak: f64 = 0.0;
    let center = geom.nodes()[geom.n() / 2];
    // half a period (circle) or half a window (lines) away, width an eighth of that
    let reach = geom.period() / if geom.kind().is_compact() { 2.0 } else { 4.0 };
    let far = geom.wrap(center + reach);
    let width2 = 2.0 * (reach / 8.0).powi(2);
    for sym in diff_symbols(ctx.kind) {
        let poly = sym.poly().expect("polynomial").clone();
        let p = assemble_kernel(&geom, &sym, &cutoff)?;
        for _ in 0..2 {
            let u = random_bandlimited(&geom, 6, &mut rng);
            let explicit = diff_operator_apply(&geom, &poly, &u)?;
            let scale = explicit.max_abs().max(1.0);
            worst = worst.max(p.apply(&u)?.max_diff(&explicit)? / scale);
        }
        // locality: a resolved bump far away has no effect at the center
        let bump = GridFunction::from_straight(geom.clone(), |s| re((-(geom.wrap(s - far)).powi(2) / width2).exp()));
        let pb = p.apply(&bump)?;
        let i = geom.n() / 2;
        leak = leak.max(pb.values()[i].norm() / pb.max_abs().max(1.0));
    }
    Ok(Outcome {
        measured: worst,
        extra_ok: leak < 1e-6,
        detail: format!("relative gap vs Σc_k(−iX)^k over degree ≤ 3; off-support response {leak:.2e}"),
        series: vec![],
        kind: geom.kind(),
        n: geom.n(),
        window: window_of(&geom),
    })
}

/// Sobolev ladder scale.
pub const SOBOLEV_NS: [usize; 4] = [64, 128, 256, 512];

/// Operators of order 0, 1, 2 for the Sobolev check, plus the order-1
/// operator mis-tagged as order 0.
pub fn sobolev_ladders(ctx: &SuiteContext) -> Result<(Vec<SobolevLadder>, SobolevLadder)> {
    let mult = |kind: ModelKind| -> Symbol {
        if kind.is_compact() {
            symbols::multiplication("2+sin/2", |s| re(2.0 + 0.5 * s.sin()))
        } else {
            symbols::multiplication("2+tanh/2", |s| re(2.0 + 0.5 * s.tanh()))
        }
    };
    let syms = [(mult(ctx.kind), 0.0), (symbols::xi(), 1.0), (symbols::jbracket_pow(2.0), 2.0)];
    let trials = 6;
    let mut out = Vec::new();
    for (sym, m) in &syms {
        let build = |g: &Arc<ModelGeometry>| assemble_kernel(g, sym, &ctx.cutoff(g)?);
        out.push(sobolev_ladder(ctx, &SOBOLEV_NS, 1.0, *m, trials, &build)?);
    }
    let build = |g: &Arc<ModelGeometry>| assemble_kernel(g, &symbols::xi(), &ctx.cutoff(g)?);
    let control = sobolev_ladder(ctx, &SOBOLEV_NS, 1.0, 0.0, trials, &build)?;
    Ok((out, control))
}

fn check_sobolev(ctx: &SuiteContext) -> Result<Outcome> {
    let (ladders, control) = sobolev_ladders(ctx)?;
    let worst = ladders.iter().map(|l| l.spread).fold(0.0, f64::max);
    let xs: Vec<f64> = SOBOLEV_NS.iter().map(|&n| n as f64).collect();
    let mut series: Vec<Series> = ladders
        .iter()
        .enumerate()
        .map(|(m, l)| Series::new(format!("m = {m}"), xs.clone(), l.estimates.clone(), true))
        .collect();
    series.push(Series::new("mis-tagged control", xs, control.estimates.clone(), true));
    Ok(Outcome {
        measured: worst,
        extra_ok: control.growth >= 0.75,
        detail: format!(
            "spreads m=0,1,2: {:.4}, {:.4}, {:.4}; mis-tagged control growth slope {:.3} (needs ≥ 0.75)",
            ladders[0].spread, ladders[1].spread, ladders[2].spread, control.growth
        ),
        series,
        kind: ctx.kind,
        n: *SOBOLEV_NS.last().expect("non-empty"),
        window: if ctx.kind.is_compact() { 0.0 } else { ctx.params.window },
    })
}

/// Invariance violation and composition gap of a suspended operator.
pub fn suspended_measures(ctx: &SuiteContext) -> Result<(f64, f64, Arc<ModelGeometry>)> {
    let geom = ctx.geometry()?;
    let cutoff = ctx.cutoff(&geom)?;
    let grid = GroupGrid::new(ctx.grid.0, ctx.grid.1)?;
    let lap = SuspendedSymbol::new("ξ²+μ²", 2.0, SymbolClass::Polynomial, |mu| {
        Symbol::polynomial("slice", PolySymbol::constant(&[re(mu * mu), re(0.0), re(1.0)]))
    });
    let mixed = SuspendedSymbol::new("w(s)ξ+iμ", 1.0, SymbolClass::Polynomial, move |mu| {
        Symbol::polynomial(
            "slice",
            PolySymbol::new(vec![Arc::new(move |_| I * mu), Arc::new(move |s| re(coefficient(ModelKind::Circle, 0)(s)))]),
        )
    });
    let p = SuspendedOperator::assemble(&geom, &lap, &cutoff, grid)?;
    let q = SuspendedOperator::assemble(&geom, &mixed, &cutoff, grid)?;
    let mut violation: f64 = 0.0;
    for op in [&p, &q] {
        violation = violation.max(extensions::check_invariance(op, &geom, grid, ctx.seed)?.max_violation);
    }
    let env = geom.params().window / 8.0;
    let w = 2.0 * PI / grid.period;
    let u = ProductFunction::from_fn(geom.clone(), grid, |s, z| {
        let e = if geom.kind().is_compact() { s.cos() } else { (-s * s / (2.0 * env * env)).exp() };
        C64::new(e * (w * z).cos(), e * (2.0 * w * z).sin())
    });
    let composed = p.compose(&q)?.apply(&u)?;
    let stepwise = p.apply(&q.apply(&u)?)?;
    let gap = composed.max_diff(&stepwise)? / stepwise.max_abs().max(f64::MIN_POSITIVE);
    Ok((violation, gap, geom))
}

fn check_suspended(ctx: &SuiteContext) -> Result<Outcome> {
    let (violation, gap, geom) = suspended_measures(ctx)?;
    Ok(Outcome {
        measured: violation,
        extra_ok: gap < 1e-8,
        detail: format!("max z-translation violation {violation:.3e}; compose-vs-apply gap {gap:.3e} (needs < 1e-8)"),
        series: vec![],
        kind: geom.kind(),
        n: geom.n(),
        window: window_of(&geom),
    })
}

/// Largest singular value of `[P, f]` by power iteration on `[P, f]^H [P, f]`.
pub fn commutator_operator_norm(p: &DenseOperator, f: &[f64], seed: u64) -> Result<f64> {
    let n = p.n();
    if f.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: f.len() });
    }
    let ph = adjoint(p);
    let comm = |op: &DenseOperator, u: &[C64]| -> Vec<C64> {
        let fu: Vec<C64> = u.iter().zip(f).map(|(v, w)| v * w).collect();
        let a = op.apply_values(&fu);
        let b = op.apply_values(u);
        a.iter().zip(&b).zip(f).map(|((x, y), w)| x - y * w).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<C64> = (0..n).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let scale = norm(&u);
        u.iter_mut().for_each(|z| *z /= scale);
        // (C^H) = −[P^H, f]
        let w: Vec<C64> = comm(&ph, &comm(p, &u)).into_iter().map(|z| -z).collect();
        let next = norm(&w);
        let done = (next - lambda).abs() <= 1e-12 * next;
        lambda = next;
        u = w;
        if done {
            break;
        }
    }
    Ok(lambda.sqrt())
}

/// Transition scale `K` of the order-0 symbol `ξ/√(K² + ξ²)` used for the
/// semiclassical check.
pub const SEMICLASSICAL_K: f64 = 8.0;

/// Multiplier `f` for the semiclassical check: smooth on the compactified model.
fn semiclassical_multiplier(geom: &ModelGeometry, s: f64) -> f64 {
    match geom.kind() {
        ModelKind::Circle => s.sin(),
        // 2x − 1
        ModelKind::BInterval => (s / 2.0).tanh(),
        ModelKind::ScLine => geom.unstraighten(s),
    }
}

/// `‖[a(tD), f]‖` over the `t` ladder for `a = ξ/√(K² + ξ²)`, at `N = 1024`,
/// `L = 4`.
pub fn semiclassical_scaling(ctx: &SuiteContext) -> Result<(DecayFit, Arc<ModelGeometry>)> {
    let geom = ctx.scaled(1024, LINE_WINDOW)?;
    let cutoff = ctx.cutoff(&geom)?;
    let k2 = SEMICLASSICAL_K * SEMICLASSICAL_K;
    let a = Symbol::new("ξ/√(K²+ξ²)", 0.0, SymbolClass::Classical, move |_, xi| re(xi / (k2 + xi * xi).sqrt()));
    let fam = SemiclassicalFamily::constant(a, cutoff, ctx.t_ladder.clone());
    let f: Vec<f64> = geom.nodes().iter().map(|&s| semiclassical_multiplier(&geom, s)).collect();
    let mut norms = Vec::new();
    for &t in fam.ladder() {
        let p = fam.operator_at(&geom, t)?;
        norms.push(commutator_operator_norm(&p, &f, ctx.seed)?);
    }
    let ladder = fam.ladder().to_vec();
    Ok((
        DecayFit {
            slope: loglog_slope(&ladder, &norms),
            lambdas: ladder,
            norms,
        },
        geom,
    ))
}

fn check_semiclassical(ctx: &SuiteContext) -> Result<Outcome> {
    let (fit, geom) = semiclassical_scaling(ctx)?;
    Ok(Outcome {
        measured: (fit.slope - 1.0).abs(),
        extra_ok: true,
        detail: format!("t-slope of ‖[P_t, f]‖ for ξ/√(K²+ξ²), K = {SEMICLASSICAL_K}: {:.4}", fit.slope),
        series: vec![Series::new("‖[P_t, f]‖", fit.lambdas, fit.norms, true)],
        kind: geom.kind(),
        n: geom.n(),
        window: window_of(&geom),
    })
}

/// Runs one named check.
pub fn run_check(name: &str, ctx: &SuiteContext) -> Result<Outcome> {
    match name {
        "identity" => check_identity(ctx),
        "vector_field" => check_vector_field(ctx),
        "weylq_oracle" => check_weylq(ctx),
        "cutoff_independence" => check_cutoff_independence(ctx),
        "composition" => check_composition(ctx),
        "commutator_poisson" => check_commutator(ctx),
        "adjoint" => check_adjoint(ctx),
        "conjugation" => check_conjugation(ctx),
        "flow_conjugation" => check_flow_conjugation(ctx),
        "diff_recovery" => check_diff(ctx),
        "sobolev" => check_sobolev(ctx),
        "suspended" => check_suspended(ctx),
        "semiclassical" => check_semiclassical(ctx),
        other => Err(Error::UnknownCheck(other.to_string())),
    }
}

/// Runs the selected checks. A failing precondition fails only its own check.
pub fn run_suite(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    cfg.validate()?;
    let ctx = SuiteContext::from_config(cfg);
    let mut reports = Vec::new();
    for name in cfg.selected_checks() {
        let tolerance = cfg.tolerances.get(name).copied().unwrap_or_else(|| default_tolerance(name));
        let report = match run_check(name, &ctx) {
            Ok(o) => CheckReport {
                name: name.to_string(),
                geometry: o.kind,
                n: o.n,
                window: o.window,
                measured: o.measured,
                tolerance,
                pass: o.measured < tolerance && o.extra_ok,
                detail: o.detail,
                seed: cfg.seed,
                series: o.series,
                artifacts: vec![],
            },
            Err(e) => CheckReport {
                name: name.to_string(),
                geometry: ctx.kind,
                n: ctx.params.n,
                window: if ctx.kind.is_compact() { 0.0 } else { ctx.params.window },
                measured: f64::NAN,
                tolerance,
                pass: false,
                detail: format!("error: {e}"),
                seed: cfg.seed,
                series: vec![],
                artifacts: vec![],
            },
        };
        reports.push(report);
    }
    Ok(reports)
}

pub const REPORT_HEADER: &str = "name,geometry,N,L,measured,tol,pass";

/// One row per check.
pub fn reports_to_csv(reports: &[CheckReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{:e},{:e},{}",
            r.name,
            r.geometry.name(),
            r.n,
            r.window,
            r.measured,
            r.tolerance,
            r.pass
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    seed: u64,
    all_pass: bool,
    checks: &'a [CheckReport],
}

pub fn reports_to_json(reports: &[CheckReport]) -> Result<String> {
    let summary = Summary {
        seed: reports.first().map_or(0, |r| r.seed),
        all_pass: reports.iter().all(|r| r.pass),
        checks: reports,
    };
    serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse(e.to_string()))
}

fn series_csv(r: &CheckReport) -> String {
    let mut out = String::from("series,x,y\n");
    for s in &r.series {
        for (x, y) in s.x.iter().zip(&s.y) {
            let _ = writeln!(out, "{},{:e},{:e}", s.label, x, y);
        }
    }
    out
}

/// Writes `report.csv`, one raw-data CSV per check with series, and
/// `summary.json`. Data file names, relative to `dir`, are appended to each
/// report's artifacts.
pub fn write_reports(dir: &Path, reports: &mut [CheckReport]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for r in reports.iter_mut() {
        if r.series.is_empty() {
            continue;
        }
        let file = format!("{}.csv", r.name);
        let path = dir.join(&file);
        std::fs::write(&path, series_csv(r))?;
        r.artifacts.push(PathBuf::from(file));
        written.push(path);
    }
    let csv = dir.join("report.csv");
    std::fs::write(&csv, reports_to_csv(reports))?;
    written.push(csv);
    let json = dir.join("summary.json");
    std::fs::write(&json, reports_to_json(reports)?)?;
    written.push(json);
    Ok(written)
}
