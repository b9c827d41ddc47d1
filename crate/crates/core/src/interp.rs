//! Natural cubic splines on a uniform grid.

use nalgebra::DMatrix;
use num_complex::Complex64;

type C64 = Complex64;

/// Natural cubic spline through samples on `origin + j·h`, `j = 0..n`.
///
/// Outside `[first node, last node]` the spline continues linearly (the
/// natural end condition). Callers decide what happens past their window.
#[derive(Debug, Clone)]
pub struct UniformSpline {
    origin: f64,
    h: f64,
    values: Vec<C64>,
    second: Vec<C64>,
}

impl UniformSpline {
    pub fn new(origin: f64, h: f64, values: &[C64]) -> Self {
        let second = natural_second_derivatives(h, values);
        Self {
            origin,
            h,
            values: values.to_vec(),
            second,
        }
    }

    pub fn eval(&self, p: f64) -> C64 {
        let n = self.values.len();
        let t = (p - self.origin) / self.h;
        let j = (t.floor() as i64).clamp(0, n as i64 - 2) as usize;
        let h = self.h;
        let a = (self.origin + (j + 1) as f64 * h - p) / h;
        let b = 1.0 - a;
        if t < 0.0 {
            let slope = (self.values[1] - self.values[0]) / h - self.second[1] * (h / 6.0);
            return self.values[0] + slope * (p - self.origin);
        }
        if t > (n - 1) as f64 {
            let last = self.origin + (n - 1) as f64 * h;
            let slope = (self.values[n - 1] - self.values[n - 2]) / h + self.second[n - 2] * (h / 6.0);
            return self.values[n - 1] + slope * (p - last);
        }
        self.values[j] * a
            + self.values[j + 1] * b
            + (self.second[j] * (a * a * a - a) + self.second[j + 1] * (b * b * b - b)) * (h * h / 6.0)
    }
}

/// Second derivatives of the natural spline: tridiagonal (1, 4, 1) system.
fn natural_second_derivatives(h: f64, y: &[C64]) -> Vec<C64> {
    let n = y.len();
    let mut m = vec![C64::new(0.0, 0.0); n];
    if n < 3 {
        return m;
    }
    let inner = n - 2;
    let mut diag = vec![4.0; inner];
    let mut rhs: Vec<C64> = (1..n - 1)
        .map(|i| (y[i + 1] - y[i] * 2.0 + y[i - 1]) * (6.0 / (h * h)))
        .collect();
    for i in 1..inner {
        let w = 1.0 / diag[i - 1];
        diag[i] -= w;
        let prev = rhs[i - 1];
        rhs[i] -= prev * w;
    }
    m[inner] = rhs[inner - 1] / diag[inner - 1];
    for i in (0..inner - 1).rev() {
        m[i + 1] = (rhs[i] - m[i + 2]) / diag[i];
    }
    m
}

/// Row `i` holds the weights that evaluate the spline at `points[i]`;
/// points outside `[lo, hi]` get a zero row.
pub fn spline_matrix(origin: f64, h: f64, n: usize, points: &[f64], lo: f64, hi: f64) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(points.len(), n);
    let mut unit = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        unit[j] = C64::new(1.0, 0.0);
        let spline = UniformSpline::new(origin, h, &unit);
        for (i, &p) in points.iter().enumerate() {
            if p >= lo && p <= hi {
                out[(i, j)] = spline.eval(p);
            }
        }
        unit[j] = C64::new(0.0, 0.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_linear_data_everywhere() {
        let h = 0.1;
        let y: Vec<C64> = (0..20).map(|j| C64::new(2.0 + 3.0 * (j as f64 * h), -1.0)).collect();
        let s = UniformSpline::new(0.0, h, &y);
        for p in [-0.05, 0.0, 0.33, 1.01, 1.9, 1.95] {
            let v = s.eval(p);
            assert!((v.re - (2.0 + 3.0 * p)).abs() < 1e-12, "p={p}");
            assert!((v.im + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fourth_order_convergence_in_the_interior() {
        let err = |n: usize| {
            let h = 4.0 / (n - 1) as f64;
            let y: Vec<C64> = (0..n)
                .map(|j| C64::new((-(j as f64 * h - 2.0).powi(2)).exp(), 0.0))
                .collect();
            let s = UniformSpline::new(-2.0, h, &y);
            (0..200)
                .map(|k| -1.0 + 2.0 * k as f64 / 199.0)
                .map(|p| (s.eval(p).re - (-p * p).exp()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(41), err(81));
        assert!(e1 / e2 > 12.0, "ratio {} {e1} {e2}", e1 / e2);
    }

    #[test]
    fn matrix_agrees_with_direct_evaluation() {
        let h = 0.25;
        let y: Vec<C64> = (0..12).map(|j| C64::new((j as f64).sin(), (j as f64).cos())).collect();
        let pts = [0.1, 1.3, 2.6, 2.74, 5.0];
        let m = spline_matrix(0.0, h, y.len(), &pts, -10.0, 2.74);
        let s = UniformSpline::new(0.0, h, &y);
        for (i, &p) in pts.iter().enumerate() {
            let row: C64 = (0..y.len()).map(|j| m[(i, j)] * y[j]).sum();
            if p <= 2.74 {
                assert!((row - s.eval(p)).norm() < 1e-12);
            } else {
                assert_eq!(row, C64::new(0.0, 0.0));
            }
        }
    }
}
