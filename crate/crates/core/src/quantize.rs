//! Kohn–Nirenberg quantization `a ↦ a_χ(D)` on the model grids.
//!
//! Operators are dense kernels against the volume weights:
//! `(Pu)(x_i) = Σ_j K[i][j] w_j u(x_j)`.
//!
//! Polynomial symbols are quantized exactly as `Σ c_k(s) (−i∂_s)^k` with
//! spectral derivatives; no cutoff or fiber quadrature is involved, since
//! the kernel of a differential operator is supported on the diagonal.
//! Everything else goes through the fiber integral
//!
//! ```text
//! K(x, y) = χ(τ̂) (2π)⁻¹ ∫ e^{iτ̂η} a(x, η) T(η) dη,   τ̂ = s(x) − s(y),
//! ```
//!
//! evaluated on a uniform `η` grid of `8N` points by one FFT per row. `T` is
//! a smooth taper on the last octave below the grid Nyquist frequency
//! `π/h`; symbols of order `−∞` are not tapered.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expmap::{self, Cutoff, FlowOp, Profile};
use crate::geometry::{same_geometry, GridFunction, ModelGeometry, ModelKind};
use crate::spectral;
use crate::symbols::{PolySymbol, Symbol};

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// How the fiber integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// Exact differential operator for polynomial symbols, FFT otherwise.
    #[default]
    Auto,
    /// Always the tapered FFT quadrature.
    Oscillatory,
}

/// Density factor `J(x, y)` in the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    /// `J = |∂τ̂/∂s(y)| = 1`: the symbol 1 quantizes to the identity.
    #[default]
    Riemannian,
    /// Integrate against `dy` in the interior chart, i.e. `J = frame(y)`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizeOptions {
    pub mode: KernelMode,
    pub density: DensityMode,
    /// `N_η / N`.
    pub eta_oversample: usize,
}

impl Default for QuantizeOptions {
    fn default() -> Self {
        Self {
            mode: KernelMode::Auto,
            density: DensityMode::Riemannian,
            eta_oversample: 8,
        }
    }
}

/// Where an operator came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub symbol: String,
    pub cutoff: Option<String>,
    pub chain: Vec<String>,
    /// "exact", "fft", or "derived" for algebraic combinations.
    pub path: String,
    pub density: DensityMode,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "symbol={} path={} density={:?}", self.symbol, self.path, self.density)?;
        if let Some(c) = &self.cutoff {
            write!(f, " cutoff={c}")?;
        }
        if !self.chain.is_empty() {
            write!(f, " chain=[{}]", self.chain.join(", "))?;
        }
        Ok(())
    }
}

impl Provenance {
    fn derived(label: impl Into<String>) -> Self {
        Self {
            symbol: label.into(),
            cutoff: None,
            chain: Vec::new(),
            path: "derived".into(),
            density: DensityMode::Riemannian,
        }
    }
}

/// A linear operator on grid values.
pub trait GridOperator: Send + Sync {
    fn geometry(&self) -> &Arc<ModelGeometry>;

    /// Nominal order; `−∞` for smoothing operators.
    fn order(&self) -> f64;

    fn apply_values(&self, u: &[C64]) -> Vec<C64>;

    /// `(Pu)(x_i)`.
    fn apply_at(&self, i: usize, u: &[C64]) -> C64 {
        self.apply_values(u)[i]
    }

    fn label(&self) -> String;
}

/// Dense kernel operator.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    geom: Arc<ModelGeometry>,
    kernel: DMatrix<C64>,
    order: f64,
    provenance: Provenance,
}

impl DenseOperator {
    pub fn from_kernel(geom: Arc<ModelGeometry>, kernel: DMatrix<C64>, order: f64, provenance: Provenance) -> Result<Self> {
        let n = geom.n();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: kernel.nrows().max(kernel.ncols()),
            });
        }
        Ok(Self {
            geom,
            kernel,
            order,
            provenance,
        })
    }

    /// From the matrix acting on grid values: `K = A W⁻¹`.
    pub fn from_matrix(geom: Arc<ModelGeometry>, matrix: DMatrix<C64>, order: f64, provenance: Provenance) -> Result<Self> {
        let mut kernel = matrix;
        for (j, &w) in geom.weights().iter().enumerate() {
            if j < kernel.ncols() {
                kernel.column_mut(j).unscale_mut(w);
            }
        }
        Self::from_kernel(geom, kernel, order, provenance)
    }

    pub fn identity(geom: &Arc<ModelGeometry>) -> Self {
        let n = geom.n();
        Self::from_matrix(geom.clone(), DMatrix::identity(n, n), 0.0, Provenance::derived("identity"))
            .expect("square by construction")
    }

    pub fn zero(geom: &Arc<ModelGeometry>) -> Self {
        let n = geom.n();
        Self {
            geom: geom.clone(),
            kernel: DMatrix::zeros(n, n),
            order: f64::NEG_INFINITY,
            provenance: Provenance::derived("zero"),
        }
    }

    pub fn geometry(&self) -> &Arc<ModelGeometry> {
        &self.geom
    }

    pub fn n(&self) -> usize {
        self.geom.n()
    }

    pub fn kernel(&self) -> &DMatrix<C64> {
        &self.kernel
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Same kernel, different order tag.
    pub fn with_order(mut self, order: f64) -> Self {
        self.order = order;
        self
    }

    /// The matrix `K W` acting on grid values.
    pub fn matrix(&self) -> DMatrix<C64> {
        let mut m = self.kernel.clone();
        for (j, &w) in self.geom.weights().iter().enumerate() {
            m.column_mut(j).scale_mut(w);
        }
        m
    }

    fn weighted(&self, u: &[C64]) -> DVector<C64> {
        DVector::from_iterator(u.len(), u.iter().zip(self.geom.weights()).map(|(v, w)| v * w))
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        u.check_grid(&self.geom)?;
        GridFunction::new(self.geom.clone(), self.apply_values(u.values()))
    }

    fn check_same(&self, other: &DenseOperator) -> Result<()> {
        if same_geometry(&self.geom, &other.geom) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn add(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.check_same(other)?;
        Ok(Self {
            geom: self.geom.clone(),
            kernel: &self.kernel + &other.kernel,
            order: self.order.max(other.order),
            provenance: Provenance::derived(format!("({} + {})", self.provenance.symbol, other.provenance.symbol)),
        })
    }

    pub fn sub(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.check_same(other)?;
        Ok(Self {
            geom: self.geom.clone(),
            kernel: &self.kernel - &other.kernel,
            order: self.order.max(other.order),
            provenance: Provenance::derived(format!("({} − {})", self.provenance.symbol, other.provenance.symbol)),
        })
    }

    pub fn scale(&self, c: C64) -> DenseOperator {
        Self {
            kernel: &self.kernel * c,
            provenance: Provenance::derived(format!("{c}·{}", self.provenance.symbol)),
            ..self.clone()
        }
    }

    /// Kernel as CSV: one line per row, `re,im` pairs, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.n() * self.n() * 48);
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.n())
                .map(|j| {
                    let v = self.kernel[(i, j)];
                    format!("{},{}", v.re, v.im)
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// `"LIEK"`, `u32 N`, `f64 order`, then the kernel row-major as
    /// `(re, im)` little-endian `f64` pairs.
    pub fn to_binary(&self) -> Vec<u8> {
        let n = self.n();
        let mut out = Vec::with_capacity(16 + 16 * n * n);
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&self.order.to_le_bytes());
        for i in 0..n {
            for j in 0..n {
                let v = self.kernel[(i, j)];
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        out
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_binary())?;
        Ok(())
    }
}

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"LIEK";

/// Contents of a binary kernel snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSnapshot {
    pub order: f64,
    pub kernel: DMatrix<C64>,
}

pub fn read_snapshot(mut reader: impl Read) -> Result<KernelSnapshot> {
    let mut head = [0u8; 16];
    reader.read_exact(&mut head)?;
    if &head[..4] != SNAPSHOT_MAGIC {
        return Err(Error::Parse("bad snapshot magic".into()));
    }
    let n = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes")) as usize;
    let order = f64::from_le_bytes(head[8..16].try_into().expect("8 bytes"));
    let mut body = vec![0u8; 16 * n * n];
    reader.read_exact(&mut body)?;
    let f = |k: usize| f64::from_le_bytes(body[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    let kernel = DMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        C64::new(f(k), f(k + 1))
    });
    Ok(KernelSnapshot { order, kernel })
}

impl GridOperator for DenseOperator {
    fn geometry(&self) -> &Arc<ModelGeometry> {
        &self.geom
    }

    fn order(&self) -> f64 {
        self.order
    }

    fn apply_values(&self, u: &[C64]) -> Vec<C64> {
        (&self.kernel * self.weighted(u)).iter().copied().collect()
    }

    fn apply_at(&self, i: usize, u: &[C64]) -> C64 {
        self.kernel
            .row(i)
            .iter()
            .zip(u.iter().zip(self.geom.weights()))
            .map(|(k, (v, w))| k * v * w)
            .sum()
    }

    fn label(&self) -> String {
        self.provenance.symbol.clone()
    }
}

/// An operator given by its matrix on grid values.
#[derive(Debug, Clone)]
pub struct MatrixOperator {
    geom: Arc<ModelGeometry>,
    matrix: DMatrix<C64>,
    order: f64,
    label: String,
}

impl MatrixOperator {
    pub fn new(geom: Arc<ModelGeometry>, matrix: DMatrix<C64>, order: f64, label: impl Into<String>) -> Self {
        Self {
            geom,
            matrix,
            order,
            label: label.into(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
}

impl GridOperator for MatrixOperator {
    fn geometry(&self) -> &Arc<ModelGeometry> {
        &self.geom
    }

    fn order(&self) -> f64 {
        self.order
    }

    fn apply_values(&self, u: &[C64]) -> Vec<C64> {
        (&self.matrix * DVector::from_column_slice(u)).iter().copied().collect()
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// `ψ_X` as a grid operator (order 0).
pub fn flow_operator(geom: &Arc<ModelGeometry>, field: &FlowOp, tol: f64) -> Result<MatrixOperator> {
    let m = expmap::flow_matrix(geom, field, tol)?;
    Ok(MatrixOperator::new(geom.clone(), m, 0.0, format!("ψ(t={})", field.time())))
}

/// Product `F₁ F₂ … F_k`, applied right to left.
#[derive(Clone)]
pub struct OperatorChain {
    geom: Arc<ModelGeometry>,
    factors: Vec<Arc<dyn GridOperator>>,
}

impl OperatorChain {
    pub fn new(factors: Vec<Arc<dyn GridOperator>>) -> Result<Self> {
        let geom = factors
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty operator chain".into()))?
            .geometry()
            .clone();
        if factors.iter().any(|f| !same_geometry(f.geometry(), &geom)) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { geom, factors })
    }
}

impl GridOperator for OperatorChain {
    fn geometry(&self) -> &Arc<ModelGeometry> {
        &self.geom
    }

    fn order(&self) -> f64 {
        self.factors.iter().map(|f| f.order()).sum()
    }

    fn apply_values(&self, u: &[C64]) -> Vec<C64> {
        let (first, rest) = self.factors.split_first().expect("non-empty");
        let inner = rest
            .iter()
            .rev()
            .fold(u.to_vec(), |v, f| f.apply_values(&v));
        first.apply_values(&inner)
    }

    fn apply_at(&self, i: usize, u: &[C64]) -> C64 {
        let (first, rest) = self.factors.split_first().expect("non-empty");
        let inner = rest
            .iter()
            .rev()
            .fold(u.to_vec(), |v, f| f.apply_values(&v));
        first.apply_at(i, &inner)
    }

    fn label(&self) -> String {
        self.factors.iter().map(|f| f.label()).collect::<Vec<_>>().join("∘")
    }
}

/// Fiber taper: 1 below half the Nyquist frequency, smooth down to 0 at it.
pub fn taper(eta: f64, nyquist: f64) -> f64 {
    Profile::Smooth.eval(eta.abs() / nyquist)
}

/// `π/h`, the largest resolvable covariable on the grid.
pub fn nyquist(geom: &ModelGeometry) -> f64 {
    PI / geom.spacing()
}

fn density_factors(geom: &ModelGeometry, density: DensityMode) -> Vec<f64> {
    match density {
        DensityMode::Riemannian => vec![1.0; geom.n()],
        DensityMode::Literal => geom.points().iter().map(|&x| geom.frame(x)).collect(),
    }
}

/// Signed index offset `i − j`, wrapped on the circle.
fn offset(geom: &ModelGeometry, i: usize, j: usize) -> i64 {
    let n = geom.n() as i64;
    let m = i as i64 - j as i64;
    if geom.kind() == ModelKind::Circle {
        let w = m.rem_euclid(n);
        if w > n / 2 {
            w - n
        } else {
            w
        }
    } else {
        m
    }
}

/// `Σ diag(c_k(s)) (−i D)^k` with the spectral differentiation matrix `D`.
pub fn polynomial_matrix(geom: &ModelGeometry, poly: &PolySymbol) -> DMatrix<C64> {
    let n = geom.n();
    let mut out = DMatrix::zeros(n, n);
    let minus_i = C64::new(0.0, -1.0);
    for k in 0..=poly.degree() {
        let c: Vec<C64> = geom.nodes().iter().map(|&s| poly.coeff(k, s)).collect();
        if c.iter().all(|v| *v == ZERO) {
            continue;
        }
        let dk = if k == 0 {
            DMatrix::identity(n, n)
        } else {
            spectral::differentiation_matrix(n, geom.period(), k as u32) * minus_i.powu(k as u32)
        };
        for i in 0..n {
            let mut row = out.row_mut(i);
            row += dk.row(i) * c[i];
        }
    }
    out
}

/// `a_χ(D)` with default options.
pub fn assemble_kernel(geom: &Arc<ModelGeometry>, sym: &Symbol, cutoff: &Cutoff) -> Result<DenseOperator> {
    assemble_kernel_with(geom, sym, cutoff, &QuantizeOptions::default())
}

pub fn assemble_kernel_with(
    geom: &Arc<ModelGeometry>,
    sym: &Symbol,
    cutoff: &Cutoff,
    opts: &QuantizeOptions,
) -> Result<DenseOperator> {
    let r0 = expmap::injectivity_radius(geom);
    if !r0.infinite && cutoff.radius() >= r0.value {
        return Err(Error::CutoffRadius {
            r: cutoff.radius(),
            r0: r0.value,
        });
    }
    let density = density_factors(geom, opts.density);
    let mut provenance = Provenance {
        symbol: sym.name().to_string(),
        cutoff: Some(cutoff.to_string()),
        chain: Vec::new(),
        path: String::new(),
        density: opts.density,
    };
    if let (Some(poly), KernelMode::Auto) = (sym.poly(), opts.mode) {
        provenance.path = "exact".into();
        provenance.cutoff = None;
        let mut m = polynomial_matrix(geom, poly);
        for (j, &jd) in density.iter().enumerate() {
            m.column_mut(j).scale_mut(jd);
        }
        return DenseOperator::from_matrix(geom.clone(), m, sym.order(), provenance);
    }
    provenance.path = "fft".into();
    let rows = fiber_rows(geom, sym, opts.eta_oversample.max(2))?;
    let n = geom.n();
    let n_eta = rows.first().map_or(0, Vec::len) as i64;
    let h = geom.spacing();
    let chi: Vec<f64> = (-(n as i64)..=n as i64)
        .map(|m| cutoff.at_length(m as f64 * h))
        .collect();
    let kernel = DMatrix::from_fn(n, n, |i, j| {
        let m = offset(geom, i, j);
        let c = chi[(m + n as i64) as usize];
        if c == 0.0 {
            return ZERO;
        }
        rows[i][m.rem_euclid(n_eta) as usize] * (c * density[j])
    });
    DenseOperator::from_kernel(geom.clone(), kernel, sym.order(), provenance)
}

/// For each row `i`, `G_i[m] = (2π)⁻¹ Σ_k Δη a(s_i, η_k) T(η_k) e^{i m h η_k}`
/// indexed by `m mod N_η`.
fn fiber_rows(geom: &ModelGeometry, sym: &Symbol, oversample: usize) -> Result<Vec<Vec<C64>>> {
    let n = geom.n();
    let n_eta = oversample * n;
    let h = geom.spacing();
    let b = nyquist(geom);
    let d_eta = 2.0 * PI / (h * n_eta as f64);
    let etas: Vec<f64> = (0..n_eta)
        .map(|k| {
            let k = if k < n_eta / 2 { k as f64 } else { k as f64 - n_eta as f64 };
            k * d_eta
        })
        .collect();
    let tapered = !sym.is_smoothing();
    let weights: Vec<f64> = etas
        .iter()
        .map(|&e| if tapered { taper(e, b) } else { 1.0 } * d_eta / (2.0 * PI))
        .collect();
    let fft = FftPlanner::new().plan_fft_inverse(n_eta);
    let rows: Vec<Result<Vec<C64>>> = geom
        .nodes()
        .par_iter()
        .map(|&s| {
            let mut buf: Vec<C64> = etas
                .iter()
                .zip(&weights)
                .map(|(&e, &w)| if w == 0.0 { ZERO } else { sym.eval(s, e) * w })
                .collect();
            if buf.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("symbol evaluation"));
            }
            if !tapered {
                let peak = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
                let tail = buf[n_eta / 2].norm().max(buf[n_eta / 2 + 1].norm());
                if tail > 1e-13 * peak.max(f64::MIN_POSITIVE) {
                    return Err(Error::QuadratureTail { tail: tail / peak, tol: 1e-13 });
                }
            }
            fft.process(&mut buf);
            Ok(buf)
        })
        .collect();
    rows.into_iter().collect()
}

pub fn apply(p: &DenseOperator, u: &GridFunction) -> Result<GridFunction> {
    p.apply(u)
}

/// `b_χ(D) ψ_{X₁} ⋯ ψ_{X_k}` for a smoothing symbol `b`.
pub fn generator_chain(
    geom: &Arc<ModelGeometry>,
    b: &Symbol,
    cutoff: &Cutoff,
    fields: &[FlowOp],
    tol: f64,
) -> Result<DenseOperator> {
    if !b.is_smoothing() {
        return Err(Error::NotSmoothing(b.name().to_string()));
    }
    let base = assemble_kernel(geom, b, cutoff)?;
    let mut m = base.matrix();
    let mut chain = Vec::new();
    for field in fields {
        m = &m * expmap::flow_matrix(geom, field, tol)?;
        chain.push(format!("ψ(t={})", field.time()));
    }
    let mut provenance = base.provenance.clone();
    provenance.chain = chain;
    DenseOperator::from_matrix(geom.clone(), m, f64::NEG_INFINITY, provenance)
}

/// `P ∘ Q`: kernel `K_P W K_Q`.
pub fn compose(p: &DenseOperator, q: &DenseOperator) -> Result<DenseOperator> {
    p.check_same(q)?;
    let mut kq = q.kernel.clone();
    for (i, &w) in p.geom.weights().iter().enumerate() {
        kq.row_mut(i).scale_mut(w);
    }
    Ok(DenseOperator {
        geom: p.geom.clone(),
        kernel: &p.kernel * kq,
        order: p.order + q.order,
        provenance: Provenance::derived(format!("{}∘{}", p.provenance.symbol, q.provenance.symbol)),
    })
}

/// `[P, Q] = PQ − QP`, tagged with order `m_P + m_Q − 1`.
pub fn commutator(p: &DenseOperator, q: &DenseOperator) -> Result<DenseOperator> {
    let pq = compose(p, q)?;
    let qp = compose(q, p)?;
    Ok(pq.sub(&qp)?.with_order(p.order + q.order - 1.0))
}

/// Adjoint for the weighted inner product; the weights are uniform, so
/// the kernel is the conjugate transpose.
pub fn adjoint(p: &DenseOperator) -> DenseOperator {
    DenseOperator {
        geom: p.geom.clone(),
        kernel: p.kernel.adjoint(),
        order: p.order,
        provenance: Provenance::derived(format!("{}*", p.provenance.symbol)),
    }
}

/// `x_H^s P x_H^{−s}` for the defining function of the first boundary face.
pub fn conjugate_by_power(p: &DenseOperator, s: C64) -> Result<DenseOperator> {
    conjugate_by_face_power(p, 0, s)
}

/// `x_H^s P x_H^{−s}` for boundary face `face`.
pub fn conjugate_by_face_power(p: &DenseOperator, face: usize, s: C64) -> Result<DenseOperator> {
    let geom = &p.geom;
    if geom.kind().is_compact() {
        return Err(Error::NoBoundary);
    }
    let log_x: Vec<f64> = geom
        .nodes()
        .iter()
        .map(|&t| {
            geom.bdf_at(t)
                .get(face)
                .copied()
                .map(f64::ln)
                .ok_or_else(|| Error::InvalidParameter(format!("no boundary face {face}")))
        })
        .collect::<Result<_>>()?;
    let scale: Vec<C64> = log_x.iter().map(|&l| (s * l).exp()).collect();
    let kernel = DMatrix::from_fn(p.n(), p.n(), |i, j| p.kernel[(i, j)] * scale[i] / scale[j]);
    Ok(DenseOperator {
        geom: geom.clone(),
        kernel,
        order: p.order,
        provenance: Provenance::derived(format!("x^({s})·{}·x^(−{s})", p.provenance.symbol)),
    })
}

/// Options for [`recover_symbol`].
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOptions {
    pub ladder: Vec<f64>,
    /// Width of the Gaussian bump `φ` (periodic bump on the circle).
    pub bump_width: f64,
    /// Normalization order `m`; defaults to the operator's tag.
    pub order: Option<f64>,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            ladder: vec![16.0, 32.0, 64.0],
            bump_width: 0.5,
            order: None,
        }
    }
}

impl RecoveryOptions {
    pub fn ladder(ladder: &[f64]) -> Self {
        Self {
            ladder: ladder.to_vec(),
            ..Self::default()
        }
    }

    pub fn with_order(mut self, m: f64) -> Self {
        self.order = Some(m);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolEstimate {
    pub value: C64,
    pub error: f64,
    /// Straightened coordinate of the grid node actually used.
    pub node: f64,
    /// Raw ladder values `λ^{−m} e^{−iλξs} P[e^{iλξs}φ](s)` at the largest λ.
    pub last_raw: C64,
}

/// Extrapolates `A(λ)` to `λ → ∞` assuming `A = a₀ + a₁/λ + a₂/λ² + …`
/// (Neville on `h = 1/λ`). Returns the limit and the change from dropping
/// the smallest λ.
pub fn richardson(lambdas: &[f64], values: &[C64]) -> (C64, f64) {
    let neville = |pts: &[(f64, C64)]| -> C64 {
        let mut p: Vec<C64> = pts.iter().map(|q| q.1).collect();
        let n = pts.len();
        for k in 1..n {
            for i in 0..n - k {
                let (hi, hk) = (pts[i].0, pts[i + k].0);
                p[i] = (p[i + 1] * hi - p[i] * hk) / (hi - hk);
            }
        }
        p[0]
    };
    let pts: Vec<(f64, C64)> = lambdas.iter().map(|l| 1.0 / l).zip(values.iter().copied()).collect();
    let full = neville(&pts);
    if pts.len() < 2 {
        return (full, f64::INFINITY);
    }
    let reduced = neville(&pts[1..]);
    (full, (full - reduced).norm())
}

fn node_index(geom: &ModelGeometry, x: f64) -> Result<usize> {
    if !geom.is_interior(x) {
        return Err(Error::NotInterior(x));
    }
    let s = geom.straighten(x);
    let (i, _) = geom
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &t)| (i, geom.wrap(t - s).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    Ok(i)
}

/// Bump with `φ(s₀) = 1`: Gaussian on the lines, `exp((cos(s − s₀) − 1)/σ²)`
/// on the circle.
pub fn bump(geom: &ModelGeometry, s0: f64, width: f64) -> Vec<f64> {
    geom.nodes()
        .iter()
        .map(|&s| match geom.kind() {
            ModelKind::Circle => (((s - s0).cos() - 1.0) / (width * width)).exp(),
            _ => (-(s - s0).powi(2) / (2.0 * width * width)).exp(),
        })
        .collect()
}

/// Numerical principal symbol `σ^(m)(P)(x, ξ)` by oscillatory testing.
pub fn recover_symbol(p: &dyn GridOperator, x: f64, xi: f64, opts: &RecoveryOptions) -> Result<SymbolEstimate> {
    let geom = p.geometry().clone();
    if xi == 0.0 {
        return Err(Error::InvalidParameter("ξ = 0".into()));
    }
    if opts.ladder.is_empty() {
        return Err(Error::InvalidParameter("empty λ ladder".into()));
    }
    let m = opts.order.unwrap_or(p.order());
    if !m.is_finite() {
        return Err(Error::InvalidParameter("order −∞ has no principal symbol".into()));
    }
    let top = opts.ladder.iter().fold(0.0f64, |a, &l| a.max(l)) * xi.abs();
    let spread = 8.0 / opts.bump_width;
    if top + spread >= nyquist(&geom) {
        return Err(Error::InvalidParameter(format!(
            "λξ = {top} too close to the grid Nyquist frequency {}",
            nyquist(&geom)
        )));
    }
    let i = node_index(&geom, x)?;
    let s0 = geom.nodes()[i];
    let phi = bump(&geom, s0, opts.bump_width);
    let values: Vec<C64> = opts
        .ladder
        .iter()
        .map(|&lambda| {
            let k = lambda * xi;
            let u: Vec<C64> = geom
                .nodes()
                .iter()
                .zip(&phi)
                .map(|(&s, &f)| C64::from_polar(f, k * (s - s0)))
                .collect();
            p.apply_at(i, &u) * lambda.powf(-m)
        })
        .collect();
    let (value, error) = richardson(&opts.ladder, &values);
    let allowed = 5e-2 * value.norm().max(1.0);
    if !(error <= allowed) {
        return Err(Error::NonConvergent {
            correction: error,
            allowed,
        });
    }
    Ok(SymbolEstimate {
        value,
        error,
        node: s0,
        last_raw: *values.last().expect("non-empty"),
    })
}
