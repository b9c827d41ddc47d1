//! Exponential map, the Riemann–Weyl fibration and its inverse `τ`,
//! cutoff functions on `A`, and flows of structural vector fields.
//!
//! Geodesics are straight lines in the straightened coordinate, so `exp`
//! and `τ` are closed-form there. [`exp_point_spray`] integrates the
//! geodesic equation in the interior chart instead and exists to
//! cross-validate the closed form.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, Vector1, Vector2};
use num_complex::Complex64;
use ode_solvers::{Dopri5, OutputType, System};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridFunction, ModelGeometry, ModelKind};
use crate::{interp, spectral};

type C64 = Complex64;

/// Default local tolerance of the flow integrator.
pub const FLOW_TOL: f64 = 1e-10;

/// `exp_x(v)` for a fiber vector with frame coordinate `v`.
pub fn exp_point(geom: &ModelGeometry, x: f64, v: f64) -> Result<f64> {
    if !geom.is_interior(x) {
        return Err(Error::NotInterior(x));
    }
    let speed = v * geom.metric_coeff(x).sqrt();
    Ok(geom.unstraighten(geom.straighten(x) + speed))
}

/// `exp_x(v)` by integrating the geodesic equation of `g₀ = dx²/frame²`,
/// `ẍ = (frame′/frame) ẋ²`, from `ẋ(0) = v·frame(x)`.
pub fn exp_point_spray(geom: &ModelGeometry, x: f64, v: f64, tol: f64) -> Result<f64> {
    if !geom.is_interior(x) {
        return Err(Error::NotInterior(x));
    }
    struct Spray<'a>(&'a ModelGeometry);
    impl System<f64, Vector2<f64>> for Spray<'_> {
        fn system(&self, _t: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
            let (x, p) = (y[0], y[1]);
            dy[0] = p;
            dy[1] = self.0.frame_derivative(x) / self.0.frame(x) * p * p;
        }
    }
    if v == 0.0 {
        return Ok(x);
    }
    let y0 = Vector2::new(x, v * geom.frame(x));
    let mut solver = Dopri5::new(Spray(geom), 0.0, 1.0, 1.0, y0, tol, tol);
    solver.set_output(OutputType::Sparse);
    solver
        .integrate()
        .map_err(|e| Error::Integration(format!("{e:?}")))?;
    let end = solver.y_out().last().ok_or_else(|| Error::Integration("no output".into()))?;
    Ok(match geom.kind() {
        ModelKind::Circle => end[0].rem_euclid(2.0 * PI),
        _ => end[0],
    })
}

/// Inverse of the fibration `v ↦ (x, exp_x(−v))`: the vector `τ(x, y)` with
/// `exp_x(−τ(x, y)) = y`, in frame coordinates.
pub fn tau(geom: &ModelGeometry, x: f64, y: f64) -> Result<f64> {
    for p in [x, y] {
        if !geom.is_interior(p) {
            return Err(Error::NotInterior(p));
        }
    }
    let d = geom.straight_difference(x, y);
    let r0 = injectivity_radius(geom);
    if !r0.infinite && d.abs() >= r0.value {
        return Err(Error::BeyondInjectivityRadius {
            distance: d.abs(),
            radius: r0.value,
        });
    }
    Ok(d / geom.metric_coeff(x).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectivityRadius {
    /// `π` on the circle; `f64::MAX` as a sentinel when infinite.
    pub value: f64,
    pub infinite: bool,
}

pub fn injectivity_radius(geom: &ModelGeometry) -> InjectivityRadius {
    match geom.kind() {
        ModelKind::Circle => InjectivityRadius {
            value: PI,
            infinite: false,
        },
        _ => InjectivityRadius {
            value: f64::MAX,
            infinite: true,
        },
    }
}

/// `min(r₀/2, 1)`.
pub fn default_cutoff_radius(geom: &ModelGeometry) -> f64 {
    (injectivity_radius(geom).value / 2.0).min(1.0)
}

/// Radial profile of a cutoff, as a function of `u = |v|/r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `ρ(u) = σ(2 − 2u) / (σ(2 − 2u) + σ(2u − 1))`, `σ(t) = e^{−1/t}` for `t > 0`.
    /// Equal to 1 on `[0, 1/2]`, 0 on `[1, ∞)`, smooth in between.
    Smooth,
    /// `max(0, 1 − u)`: only Lipschitz, not 1 near the zero section.
    Tent,
    /// Indicator of `u < 1`.
    Step,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Smooth => "smooth",
            Profile::Tent => "tent",
            Profile::Step => "step",
        }
    }

    pub fn eval(self, u: f64) -> f64 {
        match self {
            Profile::Smooth => smooth_step(u),
            Profile::Tent => (1.0 - u).max(0.0),
            Profile::Step => {
                if u < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_smooth(self) -> bool {
        matches!(self, Profile::Smooth)
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(Profile::Smooth),
            "tent" => Ok(Profile::Tent),
            "step" => Ok(Profile::Step),
            other => Err(Error::InvalidParameter(format!("cutoff profile `{other}`"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn sigma(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn smooth_step(u: f64) -> f64 {
    let a = sigma(2.0 - 2.0 * u);
    let b = sigma(2.0 * u - 1.0);
    if a == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// A cutoff `χ(x, v) = ρ(|v|_g / r)` supported in `(A)_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    radius: f64,
    profile: Profile,
}

impl Cutoff {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    /// Value at a fiber vector of length `len` (in `g`).
    pub fn at_length(&self, len: f64) -> f64 {
        self.profile.eval(len.abs() / self.radius)
    }

    /// `χ(x, v)` for a frame coordinate `v`.
    pub fn eval(&self, geom: &ModelGeometry, x: f64, v: f64) -> f64 {
        self.at_length(v * geom.metric_coeff(x).sqrt())
    }

    /// Same cutoff with a different profile; bypasses the smoothness
    /// requirement so negative controls can be built.
    pub fn with_profile(self, profile: Profile) -> Self {
        Self { profile, ..self }
    }
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(r={})", self.profile, self.radius)
    }
}

pub fn make_cutoff(geom: &ModelGeometry, r: f64, profile: Profile) -> Result<Cutoff> {
    let r0 = injectivity_radius(geom);
    if !(r > 0.0 && r.is_finite()) || (!r0.infinite && r >= r0.value) {
        return Err(Error::CutoffRadius { r, r0: r0.value });
    }
    Ok(Cutoff { radius: r, profile })
}

/// A structural vector field `X = f·frame`, given by its frame coefficient
/// as a function of the straightened coordinate, flowed for time `time`.
#[derive(Clone)]
pub struct FlowOp {
    coeff: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    time: f64,
}

impl fmt::Debug for FlowOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowOp").field("time", &self.time).finish_non_exhaustive()
    }
}

impl FlowOp {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(coeff: F) -> Self {
        Self {
            coeff: Arc::new(coeff),
            time: 1.0,
        }
    }

    /// The frame field itself.
    pub fn frame() -> Self {
        Self::new(|_| 1.0)
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0)
    }

    pub fn at_time(&self, time: f64) -> Self {
        Self {
            coeff: self.coeff.clone(),
            time,
        }
    }

    /// The field `−X` (same time).
    pub fn negated(&self) -> Self {
        let c = self.coeff.clone();
        Self {
            coeff: Arc::new(move |s| -c(s)),
            time: self.time,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn coeff(&self, s: f64) -> f64 {
        (self.coeff)(s)
    }

    /// `Ψ_X(time, s)` in the straightened coordinate.
    pub fn flow_point(&self, s: f64, tol: f64) -> Result<f64> {
        struct Field<'a>(&'a (dyn Fn(f64) -> f64 + Send + Sync));
        impl System<f64, Vector1<f64>> for Field<'_> {
            fn system(&self, _t: f64, y: &Vector1<f64>, dy: &mut Vector1<f64>) {
                dy[0] = (self.0)(y[0]);
            }
        }
        if !self.coeff(s).is_finite() {
            return Err(Error::NonFinite("flow field"));
        }
        if self.time == 0.0 {
            return Ok(s);
        }
        let mut solver = Dopri5::new(
            Field(self.coeff.as_ref()),
            0.0,
            self.time,
            self.time,
            Vector1::new(s),
            tol,
            tol,
        );
        solver.set_output(OutputType::Sparse);
        solver
            .integrate()
            .map_err(|e| Error::Integration(format!("{e:?}")))?;
        let end = solver.y_out().last().ok_or_else(|| Error::Integration("no output".into()))?[0];
        if !end.is_finite() {
            return Err(Error::NonFinite("flow trajectory"));
        }
        Ok(end)
    }
}

/// Flowed grid: the image of every node and the nodes whose image left
/// the truncation window.
#[derive(Debug, Clone)]
pub struct FlowedNodes {
    pub images: Vec<f64>,
    pub exited: Vec<usize>,
}

pub fn flow_nodes(geom: &ModelGeometry, field: &FlowOp, tol: f64) -> Result<FlowedNodes> {
    let (lo, hi) = geom.window_bounds();
    let mut images = Vec::with_capacity(geom.n());
    let mut exited = Vec::new();
    for (i, &s) in geom.nodes().iter().enumerate() {
        let img = field.flow_point(s, tol)?;
        if !geom.kind().is_compact() && (img < lo || img > hi) {
            exited.push(i);
        }
        images.push(img);
    }
    Ok(FlowedNodes { images, exited })
}

/// Result of [`flow_apply`]: `u ∘ Ψ_X(t, ·)` and the nodes whose flow left
/// the window (their values are set to zero).
#[derive(Debug, Clone)]
pub struct Flowed {
    pub function: GridFunction,
    pub exited: Vec<usize>,
}

/// Pull-back `ψ_X u = u ∘ Ψ_X(t, ·)`: trigonometric interpolation on the
/// circle, natural cubic splines on the line models.
pub fn flow_apply(geom: &Arc<ModelGeometry>, field: &FlowOp, u: &GridFunction, tol: f64) -> Result<Flowed> {
    u.check_grid(geom)?;
    let flowed = flow_nodes(geom, field, tol)?;
    let values = match geom.kind() {
        ModelKind::Circle => spectral::trig_interpolate(u.values(), geom.period(), geom.origin(), &flowed.images),
        _ => {
            let spline = interp::UniformSpline::new(geom.origin(), geom.spacing(), u.values());
            let (lo, hi) = geom.window_bounds();
            flowed
                .images
                .iter()
                .map(|&p| {
                    if p < lo || p > hi {
                        C64::new(0.0, 0.0)
                    } else {
                        spline.eval(p)
                    }
                })
                .collect()
        }
    };
    Ok(Flowed {
        function: GridFunction::new(geom.clone(), values)?,
        exited: flowed.exited,
    })
}

/// Matrix of `ψ_X` acting on grid values.
pub fn flow_matrix(geom: &ModelGeometry, field: &FlowOp, tol: f64) -> Result<DMatrix<C64>> {
    let flowed = flow_nodes(geom, field, tol)?;
    Ok(match geom.kind() {
        ModelKind::Circle => {
            spectral::trig_interpolation_matrix(geom.n(), geom.period(), geom.origin(), &flowed.images)
        }
        _ => {
            let (lo, hi) = geom.window_bounds();
            interp::spline_matrix(geom.origin(), geom.spacing(), geom.n(), &flowed.images, lo, hi)
        }
    })
}
