//! Symbols on `A*` in frame coordinates `(s, ξ)`.
//!
//! `s` is the straightened coordinate and `ξ` the dual frame coordinate,
//! so `g(ξ, ξ) = ξ²` on every model. Symbols are complex valued.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C64 = Complex64;

pub type SymbolFn = Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>;
pub type DerivFn = Arc<dyn Fn(f64, f64, usize) -> C64 + Send + Sync>;
pub type Coeff = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Highest `ξ`-derivative available analytically.
pub const MAX_XI_DERIVATIVE: usize = 4;

/// Step of the fourth-order central difference used for `∂_s`.
pub const S_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolClass {
    Type10,
    Classical,
    Polynomial,
    /// Order `−∞`.
    Smoothing,
}

/// `⟨ξ⟩ = sqrt(1 + g(ξ, ξ))`; the metric is 1 in frame coordinates.
pub fn jbracket(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn real_coeff<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Coeff {
    Arc::new(move |s| c(f(s)))
}

/// Fourth-order central difference in `s`.
pub fn diff_s<F: Fn(f64) -> C64>(f: F, s: f64) -> C64 {
    let h = S_STEP;
    (f(s - 2.0 * h) - f(s + 2.0 * h) + (f(s + h) - f(s - h)) * 8.0) / (12.0 * h)
}

/// Truncated Taylor series `Σ b_k (ξ − ξ₀)^k`, enough for four derivatives.
#[derive(Debug, Clone, Copy)]
struct Jet([f64; MAX_XI_DERIVATIVE + 1]);

impl Jet {
    fn quadratic(a0: f64, a1: f64, a2: f64) -> Self {
        Jet([a0, a1, a2, 0.0, 0.0])
    }

    fn powf(self, p: f64) -> Self {
        let a = self.0;
        let mut b = [0.0; MAX_XI_DERIVATIVE + 1];
        b[0] = a[0].powf(p);
        for n in 1..=MAX_XI_DERIVATIVE {
            let acc: f64 = (1..=n)
                .map(|k| (p * k as f64 - (n - k) as f64) * a[k] * b[n - k])
                .sum();
            b[n] = acc / (n as f64 * a[0]);
        }
        Jet(b)
    }

    fn exp(self) -> Self {
        let a = self.0;
        let mut b = [0.0; MAX_XI_DERIVATIVE + 1];
        b[0] = a[0].exp();
        for n in 1..=MAX_XI_DERIVATIVE {
            let acc: f64 = (1..=n).map(|k| k as f64 * a[k] * b[n - k]).sum();
            b[n] = acc / n as f64;
        }
        Jet(b)
    }

    fn derivative(self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|j| j as f64).product();
        self.0[k] * fact
    }
}

/// `a(s, ξ) = Σ c_k(s) ξ^k`.
#[derive(Clone)]
pub struct PolySymbol {
    coeffs: Vec<Coeff>,
}

impl fmt::Debug for PolySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolySymbol(degree {})", self.degree())
    }
}

impl PolySymbol {
    pub fn new(coeffs: Vec<Coeff>) -> Self {
        let coeffs = if coeffs.is_empty() {
            vec![Arc::new(|_| c(0.0)) as Coeff]
        } else {
            coeffs
        };
        Self { coeffs }
    }

    pub fn constant(coeffs: &[C64]) -> Self {
        Self::new(
            coeffs
                .iter()
                .map(|&v| Arc::new(move |_: f64| v) as Coeff)
                .collect(),
        )
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize, s: f64) -> C64 {
        self.coeffs.get(k).map_or(c(0.0), |f| f(s))
    }

    pub fn coeffs(&self) -> &[Coeff] {
        &self.coeffs
    }

    pub fn eval(&self, s: f64, xi: f64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(c(0.0), |acc, f| acc * xi + f(s))
    }

    pub fn dxi(&self, s: f64, xi: f64, k: usize) -> C64 {
        let mut acc = c(0.0);
        for j in (k..self.coeffs.len()).rev() {
            let falling: f64 = (j - k + 1..=j).map(|t| t as f64).product();
            acc = acc * xi + self.coeffs[j](s) * falling;
        }
        acc
    }

    fn map_coeffs(&self, f: impl Fn(usize, Coeff) -> Coeff) -> Self {
        Self::new(self.coeffs.iter().cloned().enumerate().map(|(k, g)| f(k, g)).collect())
    }

    fn mul(&self, other: &PolySymbol) -> Self {
        let (a, b) = (self.coeffs.clone(), other.coeffs.clone());
        let n = a.len() + b.len() - 1;
        let coeffs = (0..n)
            .map(|k| {
                let (a, b) = (a.clone(), b.clone());
                Arc::new(move |s: f64| {
                    (0..=k)
                        .filter(|&i| i < a.len() && k - i < b.len())
                        .map(|i| a[i](s) * b[k - i](s))
                        .sum()
                }) as Coeff
            })
            .collect();
        Self::new(coeffs)
    }

    fn add(&self, other: &PolySymbol) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| {
                let (a, b) = (self.clone(), other.clone());
                Arc::new(move |s: f64| a.coeff(k, s) + b.coeff(k, s)) as Coeff
            })
            .collect();
        Self::new(coeffs)
    }

    /// `{a, b} = Σ (k a_k b_l′ − l a_k′ b_l) ξ^{k+l−1}`.
    fn bracket(&self, other: &PolySymbol) -> Self {
        let (a, b) = (self.coeffs.clone(), other.coeffs.clone());
        let top = (a.len() + b.len()).saturating_sub(2).max(1);
        let coeffs = (0..top)
            .map(|n| {
                let (a, b) = (a.clone(), b.clone());
                Arc::new(move |s: f64| {
                    let mut acc = c(0.0);
                    for k in 0..a.len() {
                        // k + l − 1 = n
                        let Some(l) = (n + 1).checked_sub(k) else { continue };
                        if l >= b.len() {
                            continue;
                        }
                        if k > 0 {
                            acc += a[k](s) * diff_s(|t| b[l](t), s) * k as f64;
                        }
                        if l > 0 {
                            acc -= diff_s(|t| a[k](t), s) * b[l](s) * l as f64;
                        }
                    }
                    acc
                }) as Coeff
            })
            .collect();
        Self::new(coeffs)
    }
}

/// A symbol with its order and class tag.
#[derive(Clone)]
pub struct Symbol {
    name: String,
    order: f64,
    class: SymbolClass,
    eval: SymbolFn,
    dxi: Option<DerivFn>,
    poly: Option<PolySymbol>,
    principal: Option<SymbolFn>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("order", &self.order)
            .field("class", &self.class)
            .finish_non_exhaustive()
    }
}

impl Symbol {
    /// A type-(1,0) symbol from a closure; `ξ`-derivatives by finite differences.
    pub fn new<F>(name: impl Into<String>, order: f64, class: SymbolClass, eval: F) -> Self
    where
        F: Fn(f64, f64) -> C64 + Send + Sync + 'static,
    {
        let order = if class == SymbolClass::Smoothing {
            f64::NEG_INFINITY
        } else {
            order
        };
        Self {
            name: name.into(),
            order,
            class,
            eval: Arc::new(eval),
            dxi: None,
            poly: None,
            principal: None,
        }
    }

    pub fn polynomial(name: impl Into<String>, poly: PolySymbol) -> Self {
        let p = poly.clone();
        Self {
            name: name.into(),
            order: poly.degree() as f64,
            class: SymbolClass::Polynomial,
            eval: Arc::new(move |s, xi| p.eval(s, xi)),
            dxi: None,
            poly: Some(poly),
            principal: None,
        }
    }

    /// Analytic `∂_ξ^k`, `k ≤ 4`.
    pub fn with_dxi<F>(mut self, dxi: F) -> Self
    where
        F: Fn(f64, f64, usize) -> C64 + Send + Sync + 'static,
    {
        self.dxi = Some(Arc::new(dxi));
        self
    }

    /// Homogeneous principal part; marks the symbol classical.
    pub fn with_principal<F>(mut self, a0: F) -> Self
    where
        F: Fn(f64, f64) -> C64 + Send + Sync + 'static,
    {
        self.principal = Some(Arc::new(a0));
        if self.class == SymbolClass::Type10 {
            self.class = SymbolClass::Classical;
        }
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
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

    pub fn is_smoothing(&self) -> bool {
        self.class == SymbolClass::Smoothing
    }

    pub fn poly(&self) -> Option<&PolySymbol> {
        self.poly.as_ref()
    }

    pub fn eval(&self, s: f64, xi: f64) -> C64 {
        (self.eval)(s, xi)
    }

    /// `∂_ξ^k a`. Analytic when available; otherwise central differences with
    /// step `⟨ξ⟩·1e−5` for `k = 1` and `⟨ξ⟩·ε^{1/(k+2)}` above.
    pub fn dxi(&self, s: f64, xi: f64, k: usize) -> C64 {
        if k == 0 {
            return self.eval(s, xi);
        }
        if let Some(p) = &self.poly {
            return p.dxi(s, xi, k);
        }
        if let (Some(d), true) = (&self.dxi, k <= MAX_XI_DERIVATIVE) {
            return d(s, xi, k);
        }
        let h = if k == 1 {
            jbracket(xi) * 1e-5
        } else {
            jbracket(xi) * f64::EPSILON.powf(1.0 / (k as f64 + 2.0))
        };
        // k-th central difference: Σ (−1)^j C(k, j) a(ξ + (k/2 − j)h) / h^k
        let mut acc = c(0.0);
        let mut binom = 1.0;
        for j in 0..=k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += self.eval(s, xi + (k as f64 / 2.0 - j as f64) * h) * (sign * binom);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        acc / h.powi(k as i32)
    }

    /// `∂_s a` by a fourth-order central difference.
    pub fn ds(&self, s: f64, xi: f64) -> C64 {
        diff_s(|t| self.eval(t, xi), s)
    }

    /// `a(s, tξ)`.
    pub fn rescale_covariable(&self, t: f64) -> Symbol {
        if let Some(p) = &self.poly {
            let scaled = p.map_coeffs(|k, f| Arc::new(move |s| f(s) * t.powi(k as i32)));
            return Symbol::polynomial(format!("{}(tξ)", self.name), scaled).with_order_tag(self.order);
        }
        let a = self.clone();
        let mut out = Symbol::new(format!("{}(tξ)", self.name), self.order, self.class, move |s, xi| {
            a.eval(s, t * xi)
        });
        if self.dxi.is_some() {
            let a = self.clone();
            out = out.with_dxi(move |s, xi, k| a.dxi(s, t * xi, k) * t.powi(k as i32));
        }
        out.principal = self.principal.clone().map(|p| {
            Arc::new(move |s: f64, xi: f64| p(s, t * xi)) as SymbolFn
        });
        out
    }

    fn with_order_tag(mut self, order: f64) -> Self {
        self.order = order;
        self
    }

    pub fn scale(&self, k: C64) -> Symbol {
        if let Some(p) = &self.poly {
            return Symbol::polynomial(self.name.clone(), p.map_coeffs(|_, f| Arc::new(move |s| f(s) * k)));
        }
        let a = self.clone();
        let mut out = Symbol::new(self.name.clone(), self.order, self.class, move |s, xi| a.eval(s, xi) * k);
        if self.dxi.is_some() {
            let a = self.clone();
            out = out.with_dxi(move |s, xi, j| a.dxi(s, xi, j) * k);
        }
        out.principal = self.principal.clone().map(|p| Arc::new(move |s: f64, xi: f64| p(s, xi) * k) as SymbolFn);
        out
    }

    pub fn add(&self, other: &Symbol) -> Symbol {
        let name = format!("({} + {})", self.name, other.name);
        if let (Some(p), Some(q)) = (&self.poly, &other.poly) {
            return Symbol::polynomial(name, p.add(q));
        }
        let order = self.order.max(other.order);
        let class = weakest(self.class, other.class);
        let (a, b) = (self.clone(), other.clone());
        let mut out = Symbol::new(name, order, class, move |s, xi| a.eval(s, xi) + b.eval(s, xi));
        let (a, b) = (self.clone(), other.clone());
        out = out.with_dxi(move |s, xi, k| a.dxi(s, xi, k) + b.dxi(s, xi, k));
        out
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Symbol) -> Symbol {
        let name = format!("{}·{}", self.name, other.name);
        if let (Some(p), Some(q)) = (&self.poly, &other.poly) {
            return Symbol::polynomial(name, p.mul(q));
        }
        let order = self.order + other.order;
        let class = if self.is_smoothing() || other.is_smoothing() {
            SymbolClass::Smoothing
        } else {
            weakest(self.class, other.class)
        };
        let (a, b) = (self.clone(), other.clone());
        let mut out = Symbol::new(name, order, class, move |s, xi| a.eval(s, xi) * b.eval(s, xi));
        let (a, b) = (self.clone(), other.clone());
        // Leibniz
        out = out.with_dxi(move |s, xi, k| {
            let mut binom = 1.0;
            let mut acc = c(0.0);
            for j in 0..=k {
                acc += a.dxi(s, xi, j) * b.dxi(s, xi, k - j) * binom;
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
            acc
        });
        if let (Ok(p), Ok(q)) = (principal_fn(self), principal_fn(other)) {
            out.principal = Some(Arc::new(move |s, xi| p(s, xi) * q(s, xi)));
            if out.class == SymbolClass::Type10 {
                out.class = SymbolClass::Classical;
            }
        }
        out
    }
}

fn weakest(a: SymbolClass, b: SymbolClass) -> SymbolClass {
    use SymbolClass::*;
    match (a, b) {
        (Smoothing, Smoothing) => Smoothing,
        (Polynomial, Polynomial) => Polynomial,
        (Type10, _) | (_, Type10) => Type10,
        _ => Classical,
    }
}

/// `1`.
pub fn one() -> Symbol {
    Symbol::polynomial("one", PolySymbol::constant(&[c(1.0)]))
}

/// `ξ`, the symbol `a_X` of the frame field.
pub fn xi() -> Symbol {
    Symbol::polynomial("xi", PolySymbol::constant(&[c(0.0), c(1.0)]))
}

/// `a_X(s, ξ) = f(s)·ξ` for `X = f·frame`.
pub fn vector_field<F: Fn(f64) -> f64 + Send + Sync + 'static>(name: &str, f: F) -> Symbol {
    Symbol::polynomial(name, PolySymbol::new(vec![real_coeff(|_| 0.0), real_coeff(f)]))
}

/// Multiplication by `f(s)` (order 0).
pub fn multiplication<F: Fn(f64) -> C64 + Send + Sync + 'static>(name: &str, f: F) -> Symbol {
    Symbol::polynomial(name, PolySymbol::new(vec![Arc::new(f)]))
}

/// `⟨ξ⟩^m`. Even non-negative integer powers are expanded into polynomials.
pub fn jbracket_pow(m: f64) -> Symbol {
    let name = format!("jbracket_pow:{m}");
    if m >= 0.0 && m.fract() == 0.0 && (m as i64) % 2 == 0 {
        let half = (m / 2.0) as usize;
        let mut coeffs = vec![c(0.0); 2 * half + 1];
        let mut binom = 1.0;
        for j in 0..=half {
            coeffs[2 * j] = c(binom);
            binom = binom * (half - j) as f64 / (j + 1) as f64;
        }
        return Symbol::polynomial(name, PolySymbol::constant(&coeffs));
    }
    Symbol::new(name, m, SymbolClass::Classical, move |_, xi| c(jbracket(xi).powf(m)))
        .with_dxi(move |_, xi, k| c(Jet::quadratic(1.0 + xi * xi, 2.0 * xi, 1.0).powf(m / 2.0).derivative(k)))
        .with_principal(move |_, xi| c(xi.abs().powf(m)))
}

/// `exp(−ξ²)`, order `−∞`.
pub fn gauss() -> Symbol {
    Symbol::new("gauss", f64::NEG_INFINITY, SymbolClass::Smoothing, |_, xi| c((-xi * xi).exp()))
        .with_dxi(|_, xi, k| c(Jet::quadratic(-xi * xi, -2.0 * xi, -1.0).exp().derivative(k)))
}

/// Names accepted by [`symbol_from_name`]; `:m` and `:[…]` take parameters.
pub const REGISTRY: [&str; 6] = ["one", "xi", "jbracket_pow:m", "gauss", "frame_field", "poly:[c0,c1,...]"];

/// Built-in symbol by name.
pub fn symbol_from_name(name: &str) -> Result<Symbol> {
    let name = name.trim();
    if let Some(m) = name.strip_prefix("jbracket_pow:") {
        let m: f64 = m
            .trim()
            .parse()
            .map_err(|_| Error::UnknownSymbol(name.to_string()))?;
        if !m.is_finite() {
            return Err(Error::UnknownSymbol(name.to_string()));
        }
        return Ok(jbracket_pow(m));
    }
    if let Some(list) = name.strip_prefix("poly:") {
        let coeffs: Vec<f64> =
            serde_json::from_str(list.trim()).map_err(|_| Error::UnknownSymbol(name.to_string()))?;
        if coeffs.is_empty() || coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::UnknownSymbol(name.to_string()));
        }
        let coeffs: Vec<C64> = coeffs.into_iter().map(c).collect();
        return Ok(Symbol::polynomial(name, PolySymbol::constant(&coeffs)));
    }
    match name {
        "one" => Ok(one()),
        "xi" => Ok(xi()),
        "gauss" => Ok(gauss()),
        "frame_field" => Ok(vector_field("frame_field", |_| 1.0)),
        _ => Err(Error::UnknownSymbol(name.to_string())),
    }
}

/// Sampling box for [`estimate_order`].
#[derive(Debug, Clone)]
pub struct OrderSampleSpec {
    pub s_samples: Vec<f64>,
    /// Positive `|ξ|` values; both signs are sampled.
    pub xi_ladder: Vec<f64>,
}

impl Default for OrderSampleSpec {
    fn default() -> Self {
        Self {
            s_samples: (0..9).map(|k| -2.0 + 0.5 * k as f64).collect(),
            xi_ladder: (3..=10).map(|k| f64::from(1u32 << k)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    /// Fitted slope of `log sup_s |a|` against `log ⟨ξ⟩`; `−∞` if `a`
    /// underflows on the ladder.
    pub order: f64,
    /// Slopes of `sup_s |∂_ξ^β a|`, `β = 0, 1, 2`.
    pub derivative_slopes: [f64; 3],
    /// `C_β = sup |∂_ξ^β a| / ⟨ξ⟩^{m̂−β}` over the box.
    pub constants: [f64; 3],
    /// `∂_ξ a` decays slower than `⟨ξ⟩^{m̂−1}` by more than 0.25.
    pub violation: bool,
    /// Decay steepens along the ladder, as for order `−∞`.
    pub smoothing_candidate: bool,
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<_> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    fit_slope(&pts)
}

pub fn estimate_order(sym: &Symbol, spec: &OrderSampleSpec) -> Result<OrderEstimate> {
    let sup = |beta: usize, xi: f64| -> Result<f64> {
        let mut m: f64 = 0.0;
        for &s in &spec.s_samples {
            for v in [xi, -xi] {
                let a = sym.dxi(s, v, beta).norm();
                if !a.is_finite() {
                    return Err(Error::NonFinite("symbol evaluation"));
                }
                m = m.max(a);
            }
        }
        Ok(m)
    };
    let mut slopes = [0.0; 3];
    let mut sups = vec![[0.0; 3]; spec.xi_ladder.len()];
    for beta in 0..3 {
        let mut pts = Vec::new();
        for (i, &xi) in spec.xi_ladder.iter().enumerate() {
            let v = sup(beta, xi)?;
            sups[i][beta] = v;
            if v > 0.0 {
                pts.push((jbracket(xi).ln(), v.ln()));
            }
        }
        slopes[beta] = if pts.len() >= 2 {
            fit_slope(&pts)
        } else if pts.len() < spec.xi_ladder.len() {
            f64::NEG_INFINITY
        } else {
            0.0
        };
    }
    let order = slopes[0];
    let local: Vec<f64> = spec
        .xi_ladder
        .windows(2)
        .zip(sups.windows(2))
        .filter(|(_, s)| s[0][0] > 0.0 && s[1][0] > 0.0)
        .map(|(x, s)| (s[1][0] / s[0][0]).ln() / (jbracket(x[1]) / jbracket(x[0])).ln())
        .collect();
    let steepening = local.windows(2).all(|w| w[1] < w[0] - 0.5);
    let underflow = sups.iter().any(|s| s[0] == 0.0);
    let smoothing_candidate = order <= -3.0 && (steepening || underflow);
    let mut constants = [0.0; 3];
    if order.is_finite() {
        for (beta, cst) in constants.iter_mut().enumerate() {
            *cst = spec
                .xi_ladder
                .iter()
                .zip(&sups)
                .map(|(&xi, s)| s[beta] / jbracket(xi).powf(order - beta as f64))
                .fold(0.0, f64::max);
        }
    }
    // a constant-in-ξ derivative of a polynomial has exact slope m − 1 only
    // if it does not vanish identically
    let violation = sups.iter().any(|s| s[1] > 0.0) && slopes[1] > order - 1.0 + 0.25;
    Ok(OrderEstimate {
        order,
        derivative_slopes: slopes,
        constants,
        violation,
        smoothing_candidate,
    })
}

fn principal_fn(sym: &Symbol) -> Result<SymbolFn> {
    if let Some(p) = &sym.poly {
        let d = p.degree();
        let top = p.coeffs[d].clone();
        return Ok(Arc::new(move |s, xi| top(s) * xi.powi(d as i32)));
    }
    match (&sym.principal, sym.class) {
        (Some(a0), _) => Ok(a0.clone()),
        (None, SymbolClass::Smoothing) => Err(Error::NoPrincipalPart(sym.name.clone())),
        _ => Err(Error::NoPrincipalPart(sym.name.clone())),
    }
}

/// Ladder used for the Richardson limit of type-(1,0) symbols.
pub const PRINCIPAL_LADDER: [f64; 3] = [64.0, 128.0, 256.0];

/// Richardson limit of `λ^{−m} a(s, λξ)` and the gap between the two
/// first-level estimates.
pub fn principal_limit(sym: &Symbol, s: f64, xi: f64) -> (C64, f64) {
    let m = sym.order;
    let est: Vec<C64> = PRINCIPAL_LADDER
        .iter()
        .map(|&l| sym.eval(s, l * xi) * l.powf(-m))
        .collect();
    let r1 = est[1] * 2.0 - est[0];
    let r2 = est[2] * 2.0 - est[1];
    ((r2 * 4.0 - r1) / 3.0, (r2 - r1).norm())
}

/// Homogeneous representative `a₀` of the principal symbol.
///
/// Type-(1,0) symbols without a stored principal part get the Richardson
/// limit of `λ^{−m} a(s, λξ)`, checked for convergence on a small sample.
pub fn principal_symbol(sym: &Symbol) -> Result<Symbol> {
    let name = format!("σ({})", sym.name);
    if let Some(p) = &sym.poly {
        let d = p.degree();
        let mut coeffs: Vec<Coeff> = vec![Arc::new(|_| c(0.0)); d];
        coeffs.push(p.coeffs[d].clone());
        return Ok(Symbol::polynomial(name, PolySymbol::new(coeffs)));
    }
    if sym.class == SymbolClass::Smoothing {
        return Err(Error::NoPrincipalPart(sym.name.clone()));
    }
    if let Some(a0) = &sym.principal {
        let a0 = a0.clone();
        return Ok(Symbol::new(name, sym.order, SymbolClass::Classical, move |s, xi| a0(s, xi)));
    }
    for s in [-1.0, 0.0, 0.5, 1.0] {
        for xi in [-2.0, -1.0, 1.0, 2.0] {
            let (a0, err) = principal_limit(sym, s, xi);
            let allowed = 1e-2 * a0.norm();
            if !(err <= allowed) {
                return Err(Error::NonConvergent {
                    correction: err,
                    allowed,
                });
            }
        }
    }
    let a = sym.clone();
    Ok(Symbol::new(name, sym.order, SymbolClass::Classical, move |s, xi| {
        principal_limit(&a, s, xi).0
    }))
}

/// `{a, b} = ∂_ξ a ∂_s b − ∂_s a ∂_ξ b` in the interior canonical coordinates.
pub fn poisson_bracket(a: &Symbol, b: &Symbol) -> Symbol {
    let name = format!("{{{}, {}}}", a.name, b.name);
    let order = a.order + b.order - 1.0;
    if let (Some(p), Some(q)) = (&a.poly, &b.poly) {
        return Symbol::polynomial(name, p.bracket(q)).with_order_tag(order);
    }
    let class = weakest(a.class, b.class);
    let (a, b) = (a.clone(), b.clone());
    Symbol::new(name, order, class, move |s, xi| {
        a.dxi(s, xi, 1) * b.ds(s, xi) - a.ds(s, xi) * b.dxi(s, xi, 1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn jbracket_examples() {
        assert_eq!(jbracket(0.0), 1.0);
        assert_eq!(jbracket(1.0), 2f64.sqrt());
        assert_eq!(jbracket(3.0), 10f64.sqrt());
    }

    #[test]
    fn jet_derivatives_match_closed_forms() {
        let xi = 0.7;
        let g = jbracket_pow(1.0);
        let j = jbracket(xi);
        assert!(close(g.dxi(0.0, xi, 1), c(xi / j), 1e-14));
        assert!(close(g.dxi(0.0, xi, 2), c(1.0 / j.powi(3)), 1e-14));
        assert!(close(g.dxi(0.0, xi, 3), c(-3.0 * xi / j.powi(5)), 1e-14));
        let e = (-xi * xi).exp();
        let h = gauss();
        assert!(close(h.dxi(0.0, xi, 1), c(-2.0 * xi * e), 1e-14));
        assert!(close(h.dxi(0.0, xi, 2), c((4.0 * xi * xi - 2.0) * e), 1e-14));
        assert!(close(h.dxi(0.0, xi, 4), c((16.0 * xi.powi(4) - 48.0 * xi * xi + 12.0) * e), 1e-13));
    }

    #[test]
    fn finite_difference_fallback_agrees_with_analytic() {
        let analytic = jbracket_pow(-1.5);
        let plain = Symbol::new("plain", -1.5, SymbolClass::Type10, |_, xi| c(jbracket(xi).powf(-1.5)));
        for xi in [-3.0, 0.2, 1.0, 40.0] {
            let scale = jbracket(xi).powf(-1.5);
            for (k, tol) in [(1, 1e-8), (2, 1e-6), (3, 1e-4), (4, 1e-3)] {
                let a = analytic.dxi(0.0, xi, k);
                let b = plain.dxi(0.0, xi, k);
                assert!((a - b).norm() <= tol * (a.norm() + scale), "k={k} xi={xi}: {a} {b}");
            }
        }
    }

    #[test]
    fn even_powers_expand_to_polynomials() {
        let p = jbracket_pow(4.0);
        assert_eq!(p.class(), SymbolClass::Polynomial);
        assert_eq!(p.poly().unwrap().degree(), 4);
        for xi in [-2.0, 0.5, 3.0] {
            assert!(close(p.eval(0.3, xi), c((1.0 + xi * xi).powi(2)), 1e-12));
        }
        assert_eq!(jbracket_pow(1.0).class(), SymbolClass::Classical);
    }

    #[test]
    fn registry() {
        for name in ["one", "xi", "gauss", "frame_field", "jbracket_pow:-2", "jbracket_pow:1.5", "poly:[1, 0, 2]"] {
            let s = symbol_from_name(name).unwrap();
            assert!(s.eval(0.1, 0.4).is_finite());
        }
        assert_eq!(symbol_from_name("poly:[1, 0, 2]").unwrap().eval(0.0, 3.0), c(19.0));
        assert_eq!(symbol_from_name("gauss").unwrap().order(), f64::NEG_INFINITY);
        for bad in ["nope", "poly:[]", "poly:x", "jbracket_pow:", "jbracket_pow:inf"] {
            assert!(matches!(symbol_from_name(bad), Err(Error::UnknownSymbol(_))), "{bad}");
        }
    }

    #[test]
    fn order_examples() {
        let spec = OrderSampleSpec::default();
        let e = estimate_order(&jbracket_pow(2.0), &spec).unwrap();
        assert!((e.order - 2.0).abs() < 0.05, "{e:?}");
        assert!(!e.violation);
        let e = estimate_order(&xi(), &spec).unwrap();
        assert!((e.order - 1.0).abs() < 0.05);
        assert!(!e.violation);
        let e = estimate_order(&gauss(), &spec).unwrap();
        assert!(e.order <= -3.0 && e.smoothing_candidate, "{e:?}");
        let e = estimate_order(&jbracket_pow(-1.0), &spec).unwrap();
        assert!((e.order + 1.0).abs() < 0.05 && !e.smoothing_candidate && !e.violation);
        assert!(e.constants.iter().all(|c| c.is_finite() && *c > 0.0));
        // ∂_ξ of sin(ξ) does not decay: flagged
        let osc = Symbol::new("osc", 0.0, SymbolClass::Type10, |_, xi| c(2.0 + xi.sin()));
        assert!(estimate_order(&osc, &spec).unwrap().violation);
        let nan = Symbol::new("nan", 0.0, SymbolClass::Type10, |_, _| c(f64::NAN));
        assert!(estimate_order(&nan, &spec).is_err());
    }

    #[test]
    fn principal_examples() {
        let a = Symbol::polynomial(
            "p",
            PolySymbol::new(vec![real_coeff(f64::sin), real_coeff(|_| 3.0), real_coeff(|_| 1.0)]),
        );
        let a0 = principal_symbol(&a).unwrap();
        for (s, x) in [(0.3, 2.0), (1.0, -1.5)] {
            assert!(close(a0.eval(s, x), c(x * x), 1e-15));
        }
        let j0 = principal_symbol(&jbracket_pow(1.0)).unwrap();
        assert!(close(j0.eval(0.0, -3.0), c(3.0), 1e-15));
        let f = vector_field("f", |s| 2.0 + s.cos());
        let f0 = principal_symbol(&f).unwrap();
        assert!(close(f0.eval(0.4, 1.7), f.eval(0.4, 1.7), 1e-15));
        assert!(principal_symbol(&gauss()).is_err());
        // Richardson path
        let t = Symbol::new("t", 1.0, SymbolClass::Type10, |s, xi| c(jbracket(xi) + s.sin()));
        let t0 = principal_symbol(&t).unwrap();
        assert!(close(t0.eval(0.5, 2.0), c(2.0), 1e-4));
        let bad = Symbol::new("bad", 0.0, SymbolClass::Type10, |_, xi| c((xi.abs().ln()).sin()));
        assert!(matches!(principal_symbol(&bad), Err(Error::NonConvergent { .. })));
    }

    #[test]
    fn bracket_of_vector_fields_is_the_field_bracket() {
        // X = frame, Y = w·frame: [X, Y] = w′·frame
        let w = |s: f64| 1.0 / (1.0 + (-s).exp()) + 0.3 * s.sin();
        let dw = |s: f64| {
            let e = (-s).exp();
            e / (1.0 + e).powi(2) + 0.3 * s.cos()
        };
        let lhs = poisson_bracket(&xi(), &vector_field("w", w));
        let rhs = vector_field("w'", dw);
        let mut gap: f64 = 0.0;
        for i in 0..128 {
            let s = -10.0 + (i as f64 + 0.5) * 20.0 / 128.0;
            for x in [-2.0, 0.5, 3.0] {
                gap = gap.max((lhs.eval(s, x) - rhs.eval(s, x)).norm());
            }
        }
        assert!(gap <= 1e-8, "{gap}");
        assert_eq!(lhs.order(), 1.0);
    }

    #[test]
    fn bracket_examples() {
        let f = multiplication("f", |s| c(s.sin() * s.exp()));
        let b = poisson_bracket(&xi(), &f);
        for s in [-1.0f64, 0.2, 2.0] {
            let expect = (s.cos() + s.sin()) * s.exp();
            assert!(close(b.eval(s, 0.7), c(expect), 1e-10));
        }
        let a = jbracket_pow(1.0).mul(&multiplication("g", |s| c(s.cos())));
        let aa = poisson_bracket(&a, &a);
        for s in [0.0, 0.7] {
            assert!(aa.eval(s, 1.3).norm() < 1e-12);
        }
    }

    fn poly3(a: f64, b: f64, k: f64) -> Symbol {
        Symbol::polynomial(
            "q",
            PolySymbol::new(vec![
                real_coeff(move |s| a * (k * s).sin()),
                real_coeff(move |s| b + (s / 2.0).cos()),
                real_coeff(move |s| a * b * (s * k).cos() / 3.0),
            ]),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn jacobi_identity(a in -1.0..1.0f64, b in -1.0..1.0f64, s in -2.0..2.0f64, x in -2.0..2.0f64) {
            let (p, q, r) = (poly3(a, b, 1.0), poly3(b, a, 0.5), poly3(a + b, 0.3, 1.3));
            let j = poisson_bracket(&p, &poisson_bracket(&q, &r))
                .add(&poisson_bracket(&q, &poisson_bracket(&r, &p)))
                .add(&poisson_bracket(&r, &poisson_bracket(&p, &q)));
            prop_assert!(j.eval(s, x).norm() <= 1e-7);
        }

        #[test]
        fn leibniz_rule(k in 0.2..2.0f64, s in -2.0..2.0f64, x in -3.0..3.0f64) {
            // compactly supported in ξ-scale: Gaussian-damped test symbols
            let a = Symbol::new("a", f64::NEG_INFINITY, SymbolClass::Smoothing, move |s, xi| c((k * s).sin() * (-xi * xi).exp()));
            let b = jbracket_pow(1.0).mul(&multiplication("m", move |s| c((-s * s).exp())));
            let cc = Symbol::new("c", 0.0, SymbolClass::Type10, move |s, xi| C64::new(s.cos(), xi / (1.0 + xi * xi)));
            let lhs = poisson_bracket(&a, &b.mul(&cc)).eval(s, x);
            let rhs = poisson_bracket(&a, &b).eval(s, x) * cc.eval(s, x) + b.eval(s, x) * poisson_bracket(&a, &cc).eval(s, x);
            prop_assert!((lhs - rhs).norm() <= 1e-8, "{} vs {}", lhs, rhs);
        }

        #[test]
        fn antisymmetry(a in -1.0..1.0f64, b in -1.0..1.0f64, s in -2.0..2.0f64, x in -2.0..2.0f64) {
            let (p, q) = (poly3(a, b, 1.0), poly3(b, a, 0.7));
            let sum = poisson_bracket(&p, &q).eval(s, x) + poisson_bracket(&q, &p).eval(s, x);
            prop_assert!(sum.norm() <= 1e-10);
        }

        #[test]
        fn principal_symbol_is_multiplicative(m1 in -2.0..2.0f64, m2 in -2.0..2.0f64, s in -1.0..1.0f64, x in 0.5..3.0f64) {
            let (a, b) = (jbracket_pow(m1), jbracket_pow(m2));
            let lhs = principal_symbol(&a.mul(&b)).unwrap().eval(s, x);
            let rhs = principal_symbol(&a).unwrap().eval(s, x) * principal_symbol(&b).unwrap().eval(s, x);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
            let (p, q) = (poly3(m1, m2, 1.0), poly3(m2, m1, 0.5));
            let lhs = principal_symbol(&p.mul(&q)).unwrap().eval(s, x);
            let rhs = principal_symbol(&p).unwrap().eval(s, x) * principal_symbol(&q).unwrap().eval(s, x);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
        }
    }
}
