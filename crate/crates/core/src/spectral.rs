//! FFT-based tools on a uniform periodic grid: Fourier multipliers,
//! differentiation, Sobolev norms and trigonometric interpolation.
//!
//! Line models are handled by treating the truncation window as one period.
//! Inputs are expected to decay to round-off at the window edges.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type C64 = Complex64;

/// Angular frequencies in FFT order for `n` samples over `period`.
pub fn angular_frequencies(n: usize, period: f64) -> Vec<f64> {
    let base = 2.0 * PI / period;
    (0..n)
        .map(|k| {
            let k = k as i64;
            let signed = if k < (n as i64 + 1) / 2 { k } else { k - n as i64 };
            base * signed as f64
        })
        .collect()
}

fn is_nyquist(k: usize, n: usize) -> bool {
    n % 2 == 0 && k == n / 2
}

pub(crate) struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn forward(&self, data: &mut [C64]) {
        self.forward.process(data);
    }

    /// Normalized inverse transform.
    pub(crate) fn inverse(&self, data: &mut [C64]) {
        self.inverse.process(data);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Applies the Fourier multiplier `symbol(ω)` to periodic samples.
///
/// When `drop_nyquist` is set the Nyquist mode of an even-length grid is
/// zeroed, which keeps real data real under odd multipliers.
pub fn apply_multiplier<F>(values: &[C64], period: f64, drop_nyquist: bool, symbol: F) -> Vec<C64>
where
    F: Fn(f64) -> C64,
{
    let n = values.len();
    let fft = FftPair::new(n);
    let mut data = values.to_vec();
    fft.forward(&mut data);
    for (k, (v, w)) in data
        .iter_mut()
        .zip(angular_frequencies(n, period))
        .enumerate()
    {
        if drop_nyquist && is_nyquist(k, n) {
            *v = C64::new(0.0, 0.0);
        } else {
            *v *= symbol(w);
        }
    }
    fft.inverse(&mut data);
    data
}

/// `order`-th spectral derivative. The Nyquist mode is dropped for every
/// positive order so that repeated first derivatives agree with a single call.
pub fn derivative(values: &[C64], period: f64, order: u32) -> Vec<C64> {
    if order == 0 {
        return values.to_vec();
    }
    apply_multiplier(values, period, true, |w| C64::new(0.0, w).powu(order))
}

/// Dense matrix of the `order`-th spectral derivative. The matrix is
/// circulant, so one transform of a unit impulse fills it.
pub fn differentiation_matrix(n: usize, period: f64, order: u32) -> DMatrix<C64> {
    let mut impulse = vec![C64::new(0.0, 0.0); n];
    impulse[0] = C64::new(1.0, 0.0);
    let column = derivative(&impulse, period, order);
    DMatrix::from_fn(n, n, |i, j| column[(i + n - j) % n])
}

/// `‖(1 + Δ)^{s/2} u‖₂` with the flat Laplacian, computed spectrally.
pub fn sobolev_norm(values: &[C64], period: f64, s: f64) -> f64 {
    let n = values.len();
    let fft = FftPair::new(n);
    let mut data = values.to_vec();
    fft.forward(&mut data);
    let sum: f64 = data
        .iter()
        .zip(angular_frequencies(n, period))
        .map(|(v, w)| (1.0 + w * w).powf(s) * v.norm_sqr())
        .sum();
    (sum * period / (n * n) as f64).sqrt()
}

/// Periodic cardinal function of an `n`-point grid with the given period,
/// evaluated at offset `d` from its node. Even grids split the Nyquist mode
/// symmetrically.
pub fn cardinal(n: usize, period: f64, d: f64) -> f64 {
    let t = PI * d / period;
    let nt = n as f64 * t;
    let den = if n % 2 == 0 { t.tan() } else { t.sin() };
    if den.abs() < 1e-13 {
        // d is a multiple of the period (even n: tan has period π, the limit is cos(n t)).
        return if n % 2 == 0 { nt.cos() } else { nt.cos() / t.cos() };
    }
    nt.sin() / (n as f64 * den)
}

/// Matrix evaluating the trigonometric interpolant of grid data
/// (nodes `origin + j·period/n`) at `points`.
pub fn trig_interpolation_matrix(n: usize, period: f64, origin: f64, points: &[f64]) -> DMatrix<C64> {
    let h = period / n as f64;
    DMatrix::from_fn(points.len(), n, |i, j| {
        C64::new(cardinal(n, period, points[i] - origin - j as f64 * h), 0.0)
    })
}

/// Evaluates the trigonometric interpolant of `values` at `points`.
pub fn trig_interpolate(values: &[C64], period: f64, origin: f64, points: &[f64]) -> Vec<C64> {
    let n = values.len();
    let h = period / n as f64;
    points
        .iter()
        .map(|&p| {
            values
                .iter()
                .enumerate()
                .map(|(j, v)| v * cardinal(n, period, p - origin - j as f64 * h))
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<C64>) {
        let h = 2.0 * PI / n as f64;
        let x: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
        let v = x.iter().map(|&x| C64::new(f(x), 0.0)).collect();
        (x, v)
    }

    #[test]
    fn derivative_of_trig_polynomial() {
        let (x, v) = sample(32, |x| (3.0 * x).sin() + (5.0 * x).cos());
        let d = derivative(&v, 2.0 * PI, 1);
        for (xi, di) in x.iter().zip(&d) {
            let exact = 3.0 * (3.0 * xi).cos() - 5.0 * (5.0 * xi).sin();
            assert!((di.re - exact).abs() < 1e-12 && di.im.abs() < 1e-12);
        }
        let d2 = derivative(&v, 2.0 * PI, 2);
        for (xi, di) in x.iter().zip(&d2) {
            let exact = -9.0 * (3.0 * xi).sin() - 25.0 * (5.0 * xi).cos();
            assert!((di.re - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn matrix_matches_transform() {
        let n = 24;
        let (_, v) = sample(n, |x| (x.sin()).exp());
        let m = differentiation_matrix(n, 2.0 * PI, 1);
        let via_matrix = &m * nalgebra::DVector::from_vec(v.clone());
        let via_fft = derivative(&v, 2.0 * PI, 1);
        for (a, b) in via_matrix.iter().zip(&via_fft) {
            assert!((a - b).norm() < 1e-12);
        }
        // real antisymmetric
        for i in 0..n {
            for j in 0..n {
                assert!((m[(i, j)] + m[(j, i)]).norm() < 1e-12);
                assert!(m[(i, j)].im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cardinal_is_kronecker_on_nodes() {
        for n in [16usize, 17] {
            let p = 3.0;
            let h = p / n as f64;
            for k in 0..n {
                let c = cardinal(n, p, k as f64 * h);
                let expect = if k == 0 { 1.0 } else { 0.0 };
                assert!((c - expect).abs() < 1e-12, "n={n} k={k} c={c}");
            }
        }
    }

    #[test]
    fn interpolation_of_shifted_trig_polynomial_is_exact() {
        let n = 32;
        let (x, v) = sample(n, |x| (2.0 * x).cos() + 0.5 * (7.0 * x).sin());
        let pts: Vec<f64> = x.iter().map(|x| x + 0.37).collect();
        let got = trig_interpolate(&v, 2.0 * PI, 0.0, &pts);
        for (p, g) in pts.iter().zip(&got) {
            let exact = (2.0 * p).cos() + 0.5 * (7.0 * p).sin();
            assert!((g.re - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn sobolev_norm_of_single_mode() {
        let n = 64;
        let (_, v) = sample(n, |x| (4.0 * x).cos());
        // ‖cos 4x‖₂² = π, weight (1 + 16)^s
        let n0 = sobolev_norm(&v, 2.0 * PI, 0.0);
        let n1 = sobolev_norm(&v, 2.0 * PI, 1.0);
        assert!((n0 - PI.sqrt()).abs() < 1e-12);
        assert!((n1 - (17.0 * PI).sqrt()).abs() < 1e-11);
    }
}
