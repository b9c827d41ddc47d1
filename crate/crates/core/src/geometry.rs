//! Model manifolds with a Lie structure at infinity.
//!
//! Each model is a compact manifold `M` (possibly with boundary) together
//! with a global frame `X` of the rank-one bundle `A`, whose anchor image is
//! a vector field tangent to the boundary. The frame has unit length, so the
//! interior `M₀` carries the metric `g₀ = dx² / frame(x)²`.
//!
//! * [`ModelKind::Circle`]: `M = M₀ = S¹`, frame `∂_θ`. Compact, no boundary.
//! * [`ModelKind::BInterval`]: `M = [0, 1]`, frame `x(1 − x)∂_x`. In
//!   dimension one the b- and 0-structures coincide, since the boundary is a
//!   finite point set and both consist of the fields vanishing there.
//! * [`ModelKind::ScLine`]: `M = [−1, 1]` compactifying `ℝ`, frame
//!   `c(1 − x²)∂_x`. The constant `c` controls the rate of degeneration at
//!   the two ends.
//!
//! Every model is globally isometric to `S¹` or `ℝ` through a straightening
//! map `s`, in which the frame is `∂_s`. All grids are uniform in `s`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Circle,
    BInterval,
    ScLine,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Circle, ModelKind::BInterval, ModelKind::ScLine];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Circle => "circle",
            ModelKind::BInterval => "b_interval",
            ModelKind::ScLine => "sc_line",
        }
    }

    pub fn is_compact(self) -> bool {
        matches!(self, ModelKind::Circle)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "circle" => Ok(ModelKind::Circle),
            "b_interval" | "binterval" => Ok(ModelKind::BInterval),
            "sc_line" | "scline" => Ok(ModelKind::ScLine),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

/// Discretization parameters: `n` grid points, truncation window `|s| ≤ window`
/// (ignored on the circle) and the scattering constant `c` (ScLine only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub window: f64,
    pub scattering_c: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            n: 128,
            window: 10.0,
            scattering_c: 1.0,
        }
    }
}

impl ModelParams {
    pub fn new(n: usize, window: f64) -> Self {
        Self {
            n,
            window,
            ..Self::default()
        }
    }
}

/// A concrete one-dimensional Lie structure at infinity with its sampling grid.
///
/// Immutable after construction; share it through `Arc`.
#[derive(Debug, Clone)]
pub struct ModelGeometry {
    kind: ModelKind,
    params: ModelParams,
    spacing: f64,
    nodes: Vec<f64>,
    points: Vec<f64>,
    weights: Vec<f64>,
}

/// Builds a model geometry and its grid.
pub fn make_model(kind: ModelKind, params: ModelParams) -> Result<Arc<ModelGeometry>> {
    if params.n < 16 {
        return Err(Error::InvalidParameter(format!("n = {} (need n ≥ 16)", params.n)));
    }
    if !kind.is_compact() && !(params.window > 0.0 && params.window.is_finite()) {
        return Err(Error::InvalidParameter(format!("window = {}", params.window)));
    }
    if kind == ModelKind::ScLine && !(params.scattering_c > 0.0 && params.scattering_c.is_finite()) {
        return Err(Error::InvalidParameter(format!("scattering_c = {}", params.scattering_c)));
    }
    let n = params.n;
    let (spacing, nodes): (f64, Vec<f64>) = match kind {
        ModelKind::Circle => {
            let h = 2.0 * PI / n as f64;
            (h, (0..n).map(|j| j as f64 * h).collect())
        }
        _ => {
            let l = params.window;
            let h = 2.0 * l / n as f64;
            (h, (0..n).map(|j| -l + (j as f64 + 0.5) * h).collect())
        }
    };
    let mut geom = ModelGeometry {
        kind,
        params,
        spacing,
        nodes,
        points: Vec::new(),
        weights: vec![spacing; n],
    };
    geom.points = geom.nodes.iter().map(|&s| geom.unstraighten(s)).collect();
    Ok(Arc::new(geom))
}

impl ModelGeometry {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn dim(&self) -> usize {
        1
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Grid spacing in the straightened coordinate.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Length of the periodized straightened window: `2π` or `2L`.
    pub fn period(&self) -> f64 {
        match self.kind {
            ModelKind::Circle => 2.0 * PI,
            _ => 2.0 * self.params.window,
        }
    }

    /// First grid node in the straightened coordinate.
    pub fn origin(&self) -> f64 {
        self.nodes[0]
    }

    /// Straightened-window bounds (`[0, 2π)` on the circle).
    pub fn window_bounds(&self) -> (f64, f64) {
        match self.kind {
            ModelKind::Circle => (0.0, 2.0 * PI),
            _ => (-self.params.window, self.params.window),
        }
    }

    /// Grid nodes in the straightened coordinate `s`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Grid nodes in the interior chart coordinate `x`.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The interior chart: `[0, 2π)` for the circle, `(0, 1)` and `(−1, 1)` otherwise.
    pub fn interior_chart(&self) -> (f64, f64) {
        match self.kind {
            ModelKind::Circle => (0.0, 2.0 * PI),
            ModelKind::BInterval => (0.0, 1.0),
            ModelKind::ScLine => (-1.0, 1.0),
        }
    }

    /// Coefficient of the anchored frame in the interior chart.
    pub fn frame(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::Circle => 1.0,
            ModelKind::BInterval => x * (1.0 - x),
            ModelKind::ScLine => self.params.scattering_c * (1.0 - x * x),
        }
    }

    pub fn frame_derivative(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::Circle => 0.0,
            ModelKind::BInterval => 1.0 - 2.0 * x,
            ModelKind::ScLine => -2.0 * self.params.scattering_c * x,
        }
    }

    /// Metric on the fiber `A_x` in the frame trivialization. The shipped
    /// models use a unit-length frame.
    pub fn metric_coeff(&self, _x: f64) -> f64 {
        1.0
    }

    /// Points of `∂M`.
    pub fn boundary_points(&self) -> Vec<f64> {
        match self.kind {
            ModelKind::Circle => Vec::new(),
            ModelKind::BInterval => vec![0.0, 1.0],
            ModelKind::ScLine => vec![-1.0, 1.0],
        }
    }

    /// Values of the boundary-defining functions `x_H` at `x`.
    pub fn bdf(&self, x: f64) -> Vec<f64> {
        match self.kind {
            ModelKind::Circle => Vec::new(),
            ModelKind::BInterval => vec![x, 1.0 - x],
            ModelKind::ScLine => vec![1.0 + x, 1.0 - x],
        }
    }

    /// Gradients of the boundary-defining functions (constant for the models).
    pub fn bdf_gradients(&self) -> Vec<f64> {
        match self.kind {
            ModelKind::Circle => Vec::new(),
            _ => vec![1.0, -1.0],
        }
    }

    /// Boundary-defining functions evaluated from the straightened
    /// coordinate, free of the cancellation in `1 − x` near the ends.
    pub fn bdf_at(&self, s: f64) -> Vec<f64> {
        match self.kind {
            ModelKind::Circle => Vec::new(),
            ModelKind::BInterval => vec![1.0 / (1.0 + (-s).exp()), 1.0 / (1.0 + s.exp())],
            ModelKind::ScLine => {
                let c2 = 2.0 * self.params.scattering_c * s;
                vec![2.0 / (1.0 + (-c2).exp()), 2.0 / (1.0 + c2.exp())]
            }
        }
    }

    /// Straightening map `s(x)`: a global isometry onto `ℝ` or the circle.
    pub fn straighten(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::Circle => x.rem_euclid(2.0 * PI),
            ModelKind::BInterval => (x / (1.0 - x)).ln(),
            ModelKind::ScLine => x.atanh() / self.params.scattering_c,
        }
    }

    /// Inverse straightening `x(s)`.
    pub fn unstraighten(&self, s: f64) -> f64 {
        match self.kind {
            ModelKind::Circle => s.rem_euclid(2.0 * PI),
            ModelKind::BInterval => 1.0 / (1.0 + (-s).exp()),
            ModelKind::ScLine => (self.params.scattering_c * s).tanh(),
        }
    }

    pub fn is_interior(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match self.kind {
            ModelKind::Circle => true,
            _ => self.bdf(x).iter().all(|&v| v > 0.0),
        }
    }

    /// Signed straightened displacement `s(x) − s(y)`, wrapped to `(−π, π]` on the circle.
    pub fn straight_difference(&self, x: f64, y: f64) -> f64 {
        let d = self.straighten(x) - self.straighten(y);
        self.wrap(d)
    }

    /// Wraps a straightened displacement onto the principal branch.
    pub fn wrap(&self, d: f64) -> f64 {
        match self.kind {
            ModelKind::Circle => {
                let w = (d + PI).rem_euclid(2.0 * PI) - PI;
                if w == -PI {
                    PI
                } else {
                    w
                }
            }
            _ => d,
        }
    }

    /// Riemannian distance on `(M₀, g₀)`.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        self.straight_difference(x, y).abs()
    }

    /// Riemannian volume of the truncated window.
    pub fn window_volume(&self) -> f64 {
        self.period()
    }

    pub(crate) fn same_grid(&self, other: &ModelGeometry) -> bool {
        self.kind == other.kind && self.params_key() == other.params_key()
    }

    fn params_key(&self) -> (usize, u64, u64) {
        match self.kind {
            ModelKind::Circle => (self.n(), 0, 0),
            ModelKind::BInterval => (self.n(), self.params.window.to_bits(), 0),
            ModelKind::ScLine => (
                self.n(),
                self.params.window.to_bits(),
                self.params.scattering_c.to_bits(),
            ),
        }
    }
}

/// Quadrature weights for `∫ f dvol_{g₀}`. In the straightened coordinate
/// `dvol = ds`, so the weights are the uniform grid spacing.
pub fn riemannian_volume_weights(geom: &ModelGeometry) -> Vec<f64> {
    geom.weights().to_vec()
}

pub(crate) fn same_geometry(a: &Arc<ModelGeometry>, b: &Arc<ModelGeometry>) -> bool {
    Arc::ptr_eq(a, b) || a.same_grid(b)
}

/// Complex samples of a function on a geometry's grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    geom: Arc<ModelGeometry>,
    values: Vec<C64>,
}

impl GridFunction {
    pub fn new(geom: Arc<ModelGeometry>, values: Vec<C64>) -> Result<Self> {
        if values.len() != geom.n() {
            return Err(Error::LengthMismatch {
                expected: geom.n(),
                got: values.len(),
            });
        }
        Ok(Self { geom, values })
    }

    pub fn zeros(geom: Arc<ModelGeometry>) -> Self {
        let n = geom.n();
        Self {
            geom,
            values: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Samples `f(s)` at the straightened nodes.
    pub fn from_straight<F: Fn(f64) -> C64>(geom: Arc<ModelGeometry>, f: F) -> Self {
        let values = geom.nodes().iter().map(|&s| f(s)).collect();
        Self { geom, values }
    }

    /// Samples `f(x)` at the interior-chart nodes.
    pub fn from_points<F: Fn(f64) -> C64>(geom: Arc<ModelGeometry>, f: F) -> Self {
        let values = geom.points().iter().map(|&x| f(x)).collect();
        Self { geom, values }
    }

    pub fn geometry(&self) -> &Arc<ModelGeometry> {
        &self.geom
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        same_geometry(&self.geom, &other.geom)
    }

    pub(crate) fn check_grid(&self, geom: &Arc<ModelGeometry>) -> Result<()> {
        if same_geometry(&self.geom, geom) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `∫ f dvol` over the window.
    pub fn integral(&self) -> C64 {
        self.values
            .iter()
            .zip(self.geom.weights())
            .map(|(v, w)| v * w)
            .sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.values
            .iter()
            .zip(self.geom.weights())
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn map<F: Fn(C64) -> C64>(&self, f: F) -> Self {
        Self {
            geom: self.geom.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with<F: Fn(C64, C64) -> C64>(&self, other: &GridFunction, f: F) -> Result<Self> {
        other.check_grid(&self.geom)?;
        Ok(Self {
            geom: self.geom.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|v| v * c)
    }

    /// Max-norm distance to another grid function.
    pub fn max_diff(&self, other: &GridFunction) -> Result<f64> {
        other.check_grid(&self.geom)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// Applies the anchored frame: `(Xf)(x) = frame(x) f′(x)`, i.e. `∂_s f` in
/// the straightened coordinate, computed spectrally.
///
/// On the line models the linear trend between the two end samples is
/// removed before the transform and its slope added back, so the
/// straightening map itself differentiates to the constant 1.
pub fn anchor_apply(geom: &Arc<ModelGeometry>, f: &GridFunction) -> Result<GridFunction> {
    f.check_grid(geom)?;
    let values = f.values();
    let period = geom.period();
    if geom.kind().is_compact() {
        let d = spectral::derivative(values, period, 1);
        return GridFunction::new(geom.clone(), d);
    }
    let nodes = geom.nodes();
    let n = nodes.len();
    let span = nodes[n - 1] - nodes[0];
    let slope = (values[n - 1] - values[0]) / span;
    let detrended: Vec<C64> = values
        .iter()
        .zip(nodes)
        .map(|(v, s)| v - slope * (s - nodes[0]))
        .collect();
    let d = spectral::derivative(&detrended, period, 1)
        .into_iter()
        .map(|v| v + slope)
        .collect();
    GridFunction::new(geom.clone(), d)
}
