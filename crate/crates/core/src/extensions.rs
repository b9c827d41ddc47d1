//! Translation-invariant operators on `M₀ × ℝ` and semiclassical families.
//!
//! The group direction is a periodic `z` grid of circumference `Z`, so the
//! group Fourier transform is an FFT and an invariant operator is a family
//! of operators on `M₀` indexed by the discrete dual frequencies `μ_k`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expmap::Cutoff;
use crate::geometry::{same_geometry, GridFunction, ModelGeometry};
use crate::quantize::{self, DenseOperator, GridOperator};
use crate::spectral::{self, FftPair};
use crate::symbols::{Symbol, SymbolClass};

type C64 = Complex64;

/// `a(s, ξ, μ)`, given as the `μ`-slice `μ ↦ a(·, ·, μ)`.
#[derive(Clone)]
pub struct SuspendedSymbol {
    name: String,
    order: f64,
    class: SymbolClass,
    slice: Arc<dyn Fn(f64) -> Symbol + Send + Sync>,
}

impl fmt::Debug for SuspendedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SuspendedSymbol")
            .field("name", &self.name)
            .field("order", &self.order)
            .finish_non_exhaustive()
    }
}

impl SuspendedSymbol {
    pub fn new<F>(name: impl Into<String>, order: f64, class: SymbolClass, slice: F) -> Self
    where
        F: Fn(f64) -> Symbol + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            order,
            class,
            slice: Arc::new(slice),
        }
    }

    /// `a(s, ξ)` with no `μ` dependence.
    pub fn from_symbol(sym: Symbol) -> Self {
        let (name, order, class) = (sym.name().to_string(), sym.order(), sym.class());
        Self::new(name, order, class, move |_| sym.clone())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn class(&self) -> SymbolClass {
        self.class
    }

    pub fn at(&self, mu: f64) -> Symbol {
        (self.slice)(mu)
    }

    pub fn eval(&self, s: f64, xi: f64, mu: f64) -> C64 {
        self.at(mu).eval(s, xi)
    }
}

/// The periodic `z` grid standing in for the group `ℝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupGrid {
    pub n_z: usize,
    pub period: f64,
}

impl GroupGrid {
    pub fn new(n_z: usize, period: f64) -> Result<Self> {
        if n_z < 2 || !(period > 0.0 && period.is_finite()) {
            return Err(Error::NonUniformGroupGrid);
        }
        Ok(Self { n_z, period })
    }

    /// Checks that sample positions form a uniform periodic grid.
    pub fn from_samples(z: &[f64], period: f64) -> Result<Self> {
        let grid = Self::new(z.len(), period)?;
        let dz = period / z.len() as f64;
        let uniform = z
            .iter()
            .enumerate()
            .all(|(l, &v)| (v - z[0] - l as f64 * dz).abs() <= 1e-9 * period);
        if uniform {
            Ok(grid)
        } else {
            Err(Error::NonUniformGroupGrid)
        }
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n_z as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_z).map(|l| l as f64 * self.spacing()).collect()
    }

    /// Dual frequencies `μ_k` in FFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        spectral::angular_frequencies(self.n_z, self.period)
    }
}

/// Samples on the product grid, stored row-major as `u[i·n_z + l]` for
/// `s_i` and `z_l`.
#[derive(Debug, Clone)]
pub struct ProductFunction {
    geom: Arc<ModelGeometry>,
    grid: GroupGrid,
    values: Vec<C64>,
}

impl ProductFunction {
    pub fn new(geom: Arc<ModelGeometry>, grid: GroupGrid, values: Vec<C64>) -> Result<Self> {
        let expected = geom.n() * grid.n_z;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { geom, grid, values })
    }

    /// Samples `f(s, z)`.
    pub fn from_fn<F: Fn(f64, f64) -> C64>(geom: Arc<ModelGeometry>, grid: GroupGrid, f: F) -> Self {
        let z = grid.nodes();
        let values = geom
            .nodes()
            .iter()
            .flat_map(|&s| z.iter().map(move |&zz| (s, zz)))
            .map(|(s, zz)| f(s, zz))
            .collect();
        Self { geom, grid, values }
    }

    pub fn geometry(&self) -> &Arc<ModelGeometry> {
        &self.geom
    }

    pub fn grid(&self) -> GroupGrid {
        self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn get(&self, i: usize, l: usize) -> C64 {
        self.values[i * self.grid.n_z + l]
    }

    /// Translation by `k` grid steps in `z`: `(T u)(s, z) = u(s, z + k·Δz)`.
    pub fn shift_z(&self, k: i64) -> Self {
        let nz = self.grid.n_z;
        let mut values = self.values.clone();
        for i in 0..self.geom.n() {
            for l in 0..nz {
                let src = (l as i64 + k).rem_euclid(nz as i64) as usize;
                values[i * nz + l] = self.values[i * nz + src];
            }
        }
        Self { values, ..self.clone() }
    }

    pub fn max_diff(&self, other: &ProductFunction) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn to_modes(&self) -> Vec<Vec<C64>> {
        let nz = self.grid.n_z;
        let n = self.geom.n();
        let fft = FftPair::new(nz);
        let mut modes = vec![vec![C64::new(0.0, 0.0); n]; nz];
        for i in 0..n {
            let mut row = self.values[i * nz..(i + 1) * nz].to_vec();
            fft.forward(&mut row);
            for (k, v) in row.into_iter().enumerate() {
                modes[k][i] = v;
            }
        }
        modes
    }

    fn from_modes(geom: Arc<ModelGeometry>, grid: GroupGrid, modes: &[Vec<C64>]) -> Self {
        let nz = grid.n_z;
        let n = geom.n();
        let fft = FftPair::new(nz);
        let mut values = vec![C64::new(0.0, 0.0); n * nz];
        for i in 0..n {
            let mut row: Vec<C64> = (0..nz).map(|k| modes[k][i]).collect();
            fft.inverse(&mut row);
            values[i * nz..(i + 1) * nz].copy_from_slice(&row);
        }
        Self { geom, grid, values }
    }
}

/// An operator on functions on the product grid.
pub trait ProductOperator {
    fn apply(&self, u: &ProductFunction) -> Result<ProductFunction>;
}

/// Invariant operator: one `M₀` operator per group frequency.
#[derive(Debug, Clone)]
pub struct SuspendedOperator {
    geom: Arc<ModelGeometry>,
    grid: GroupGrid,
    blocks: Vec<DenseOperator>,
    order: f64,
}

impl SuspendedOperator {
    pub fn assemble(geom: &Arc<ModelGeometry>, sym: &SuspendedSymbol, cutoff: &Cutoff, grid: GroupGrid) -> Result<Self> {
        let blocks = grid
            .frequencies()
            .into_iter()
            .map(|mu| quantize::assemble_kernel(geom, &sym.at(mu), cutoff))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            geom: geom.clone(),
            grid,
            blocks,
            order: sym.order(),
        })
    }

    pub fn grid(&self) -> GroupGrid {
        self.grid
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn blocks(&self) -> &[DenseOperator] {
        &self.blocks
    }

    /// Composition frequency by frequency.
    pub fn compose(&self, other: &SuspendedOperator) -> Result<SuspendedOperator> {
        if !same_geometry(&self.geom, &other.geom) || self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(p, q)| quantize::compose(p, q))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            geom: self.geom.clone(),
            grid: self.grid,
            blocks,
            order: self.order + other.order,
        })
    }
}

impl ProductOperator for SuspendedOperator {
    fn apply(&self, u: &ProductFunction) -> Result<ProductFunction> {
        if !same_geometry(&self.geom, &u.geom) || self.grid != u.grid {
            return Err(Error::GridMismatch);
        }
        let modes: Vec<Vec<C64>> = u
            .to_modes()
            .iter()
            .zip(&self.blocks)
            .map(|(m, p)| p.apply_values(m))
            .collect();
        Ok(ProductFunction::from_modes(self.geom.clone(), self.grid, &modes))
    }
}

/// Quantizes `sa` on each group frequency and applies it to `u`.
pub fn suspended_apply(
    geom: &Arc<ModelGeometry>,
    sa: &SuspendedSymbol,
    cutoff: &Cutoff,
    u: &ProductFunction,
) -> Result<ProductFunction> {
    SuspendedOperator::assemble(geom, sa, cutoff, u.grid)?.apply(u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    /// `max ‖P T_k u − T_k P u‖_∞ / max ‖P u‖_∞` over shifts and trials.
    pub max_violation: f64,
    pub shifts: Vec<i64>,
    pub trials: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Tests commutation with `z` translations on seeded random inputs.
pub fn check_invariance(
    op: &dyn ProductOperator,
    geom: &Arc<ModelGeometry>,
    grid: GroupGrid,
    seed: u64,
) -> Result<InvarianceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<i64> = vec![1, -1, 3, (grid.n_z / 2) as i64, rng.gen_range(2..grid.n_z as i64)];
    let trials = 3;
    let tolerance = 1e-10;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (a, b, k, q) = (
            rng.gen_range(0.5..2.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(1..4) as f64,
            rng.gen_range(1..4) as f64,
        );
        let w = 2.0 * std::f64::consts::PI / grid.period;
        let u = ProductFunction::from_fn(geom.clone(), grid, |s, z| {
            let env = if geom.kind().is_compact() { 1.0 } else { (-s * s / (2.0 * a * a)).exp() };
            C64::new(env * (k * s + b).cos() * (q * w * z).cos(), env * (w * z + b).sin())
        });
        let pu = op.apply(&u)?;
        let scale = pu.max_abs().max(f64::MIN_POSITIVE);
        for &t in &shifts {
            let lhs = op.apply(&u.shift_z(t))?;
            let rhs = pu.shift_z(t);
            worst = worst.max(lhs.max_diff(&rhs)? / scale);
        }
    }
    Ok(InvarianceReport {
        max_violation: worst,
        pass: worst <= tolerance,
        shifts,
        trials,
        tolerance,
    })
}

/// `t ↦ a(t, s, ξ)`.
pub type FamilySymbol = Arc<dyn Fn(f64) -> Symbol + Send + Sync>;

/// Semiclassical family `a_χ(t, tD)` with a per-`t` kernel cache.
pub struct SemiclassicalFamily {
    name: String,
    symbol: FamilySymbol,
    cutoff: Cutoff,
    ladder: Vec<f64>,
    cache: Mutex<HashMap<u64, Arc<DenseOperator>>>,
}

impl fmt::Debug for SemiclassicalFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemiclassicalFamily")
            .field("name", &self.name)
            .field("ladder", &self.ladder)
            .finish_non_exhaustive()
    }
}

impl SemiclassicalFamily {
    pub fn new<F>(name: impl Into<String>, symbol: F, cutoff: Cutoff, ladder: Vec<f64>) -> Self
    where
        F: Fn(f64) -> Symbol + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            symbol: Arc::new(symbol),
            cutoff,
            ladder,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// A family with no explicit `t` dependence.
    pub fn constant(sym: Symbol, cutoff: Cutoff, ladder: Vec<f64>) -> Self {
        let name = sym.name().to_string();
        Self::new(name, move |_| sym.clone(), cutoff, ladder)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    pub fn cutoff(&self) -> &Cutoff {
        &self.cutoff
    }

    /// `a(t, s, tξ)`.
    pub fn rescaled_symbol(&self, t: f64) -> Symbol {
        (self.symbol)(t).rescale_covariable(t)
    }

    /// The operator `P_t`, assembled once per `(geometry, t)`.
    pub fn operator_at(&self, geom: &Arc<ModelGeometry>, t: f64) -> Result<Arc<DenseOperator>> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::NonPositiveT(t));
        }
        let key = t.to_bits();
        if let Some(p) = self.cache.lock().expect("cache poisoned").get(&key) {
            if same_geometry(p.geometry(), geom) {
                return Ok(p.clone());
            }
        }
        let p = Arc::new(quantize::assemble_kernel(geom, &self.rescaled_symbol(t), &self.cutoff)?);
        self.cache
            .lock()
            .expect("cache poisoned")
            .entry(key)
            .or_insert_with(|| p.clone());
        Ok(p)
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("cache poisoned").len()
    }
}

pub fn semiclassical_apply(
    geom: &Arc<ModelGeometry>,
    fam: &SemiclassicalFamily,
    t: f64,
    u: &GridFunction,
) -> Result<GridFunction> {
    fam.operator_at(geom, t)?.apply(u)
}

/// Unit-norm wave packet `e^{iξ₀s/t} φ(s − s₀)`: a Gaussian envelope on the
/// lines, a plane wave on the circle.
pub fn wave_packet(geom: &Arc<ModelGeometry>, xi0: f64, t: f64, s0: f64, width: f64) -> GridFunction {
    let k = xi0 / t;
    let u = GridFunction::from_straight(geom.clone(), |s| {
        let env = if geom.kind().is_compact() {
            1.0
        } else {
            (-(s - s0).powi(2) / (2.0 * width * width)).exp()
        };
        C64::from_polar(env, k * (s - s0))
    });
    let norm = u.norm_l2();
    u.scale(C64::new(1.0 / norm, 0.0))
}

/// `‖[P_t, f] u‖₂` for a multiplication operator `f` and wave packet `u`.
pub fn commutator_norm(p: &DenseOperator, f: &[C64], u: &GridFunction) -> Result<f64> {
    u.check_grid(p.geometry())?;
    if f.len() != u.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            got: f.len(),
        });
    }
    let fu: Vec<C64> = u.values().iter().zip(f).map(|(a, b)| a * b).collect();
    let pfu = p.apply_values(&fu);
    let pu = p.apply_values(u.values());
    let diff: Vec<C64> = pfu.iter().zip(&pu).zip(f).map(|((a, b), c)| a - b * c).collect();
    Ok(GridFunction::new(p.geometry().clone(), diff)?.norm_l2())
}
