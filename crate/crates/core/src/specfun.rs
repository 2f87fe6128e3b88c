//! Special functions and quadrature rules.
//!
//! Laguerre and Jacobi polynomials are evaluated by their three-term
//! recurrences. Gauss rules come from Golub–Welsch on the Jacobi matrix,
//! followed by a Newton polish of the nodes and weights from the
//! derivative formula, which keeps the tiny tail weights accurate in a
//! relative sense.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::tridiagonal_eig;
use crate::error::{domain, Error, Result};

/// Degree and parameters of a classical orthogonal polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyParams {
    pub n: usize,
    pub alpha: f64,
    /// Second Jacobi parameter; zero wherever the kernel formula uses it.
    #[serde(default)]
    pub beta: f64,
}

impl PolyParams {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        Self::jacobi(n, alpha, 0.0)
    }

    pub fn jacobi(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { n, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > -1.0) || !self.alpha.is_finite() {
            return Err(domain("PolyParams", format!("alpha = {} must exceed -1", self.alpha)));
        }
        if !self.beta.is_finite() {
            return Err(domain("PolyParams", "beta must be finite"));
        }
        Ok(())
    }
}

/// Generalized Laguerre polynomial `L_n^alpha(t)`.
pub fn laguerre(params: PolyParams, t: f64) -> Result<f64> {
    params.validate()?;
    if !t.is_finite() {
        return Err(domain("laguerre", format!("non-finite argument {t}")));
    }
    Ok(laguerre_unchecked(params.n, params.alpha, t))
}

#[inline]
pub(crate) fn laguerre_unchecked(n: usize, alpha: f64, t: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - t;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - t) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `L_n^alpha` at a complex argument, same recurrence.
pub fn laguerre_complex(n: usize, alpha: f64, t: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let mut prev = one;
    if n == 0 {
        return prev;
    }
    let mut cur = one * (1.0 + alpha) - t;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - t) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Jacobi polynomial `P_n^{(alpha, beta)}(t)`.
///
/// Arguments outside `[-1, 1]` are evaluated but flagged in the second
/// tuple slot.
pub fn jacobi(params: PolyParams, t: f64) -> Result<(f64, bool)> {
    params.validate()?;
    if !t.is_finite() {
        return Err(domain("jacobi", format!("non-finite argument {t}")));
    }
    let outside = !(-1.0..=1.0).contains(&t);
    Ok((jacobi_unchecked(params.n, params.alpha, params.beta, t), outside))
}

#[inline]
pub(crate) fn jacobi_unchecked(n: usize, a: f64, b: f64, t: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = (a + 1.0) + (a + b + 2.0) * (t - 1.0) / 2.0;
    for k in 2..=n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let c0 = 2.0 * kf * (kf + a + b) * (s - 2.0);
        let c1 = (s - 1.0) * (s * (s - 2.0) * t + a * a - b * b);
        let c2 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * s;
        let next = (c1 * cur - c2 * prev) / c0;
        prev = cur;
        cur = next;
    }
    cur
}

// Lanczos coefficients, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural logarithm of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("log_gamma", format!("argument {x} must be positive")));
    }
    Ok(ln_gamma_pos(x))
}

pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    if x >= 7.0 {
        return lanczos(x);
    }
    if x < 1.5 {
        // ln G(x) = ln G(x + 1) - ln x, with ln(1 + e) kept accurate near x = 1.
        let log_x = if (x - 1.0).abs() < 0.5 { (x - 1.0).ln_1p() } else { x.ln() };
        return ln_gamma_pos(x + 1.0) - log_x;
    }
    let mut y = x;
    let mut shift = 0.0;
    while y > 2.5 {
        y -= 1.0;
        shift += y.ln();
    }
    ln_gamma_near_two(y - 2.0) + shift
}

/// Taylor series of `ln Gamma(2 + eps)` for `|eps| <= 1/2`.
fn ln_gamma_near_two(eps: f64) -> f64 {
    let mut acc = 0.0;
    let mut pow = -eps;
    for (i, z) in ZETA_MINUS_ONE.iter().enumerate() {
        pow *= -eps;
        acc += z * pow / (i + 2) as f64;
    }
    ONE_MINUS_EULER_GAMMA * eps + acc
}

const ONE_MINUS_EULER_GAMMA: f64 = 0.422_784_335_098_467_14;

/// `zeta(k) - 1` for `k = 2, 3, ...`.
const ZETA_MINUS_ONE: [f64; 30] = [
    6.44934066848226406e-01,
    2.02056903159594292e-01,
    8.23232337111381857e-02,
    3.69277551433699266e-02,
    1.73430619844491402e-02,
    8.34927738192282713e-03,
    4.07735619794433960e-03,
    2.00839282608221426e-03,
    9.94575127818085256e-04,
    4.94188604119464529e-04,
    2.46086553308048320e-04,
    1.22713347578489145e-04,
    6.12481350587048277e-05,
    3.05882363070204933e-05,
    1.52822594086518710e-05,
    7.63719763789976257e-06,
    3.81729326499984022e-06,
    1.90821271655393897e-06,
    9.53962033872796212e-07,
    4.76932986787806447e-07,
    2.38450502727733004e-07,
    1.19219925965311064e-07,
    5.96081890512594801e-08,
    2.98035035146522793e-08,
    1.49015548283650427e-08,
    7.45071178983543006e-09,
    3.72533402478845728e-09,
    1.86265972351304914e-09,
    9.31327432419668166e-10,
    4.65662906503378366e-10,
];

fn lanczos(x: f64) -> f64 {
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Gamma function for positive arguments.
pub fn gamma(x: f64) -> Result<f64> {
    log_gamma(x).map(f64::exp)
}

/// Generalized binomial coefficient `C(a, k)` for real `a`.
pub fn binomial_general(a: f64, k: usize) -> f64 {
    let kf = k as f64;
    if a + 1.0 > 0.0 && a - kf + 1.0 > 0.0 {
        (ln_gamma_pos(a + 1.0) - ln_gamma_pos(kf + 1.0) - ln_gamma_pos(a - kf + 1.0)).exp()
    } else {
        // Negative gamma arguments: the falling-factorial product carries the sign.
        (0..k).fold(1.0, |acc, j| acc * (a - j as f64) / (j as f64 + 1.0))
    }
}

/// Kind of a quadrature rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RuleKind {
    /// Weight `t^exponent e^{-t}` on `(0, inf)`.
    GaussLaguerre { order: usize, exponent: f64 },
    /// Unit weight on `[lo, hi]`.
    GaussLegendre { order: usize, lo: f64, hi: f64 },
}

/// One-dimensional rule: `sum w_i f(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn integrate_complex(&self, mut f: impl FnMut(f64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Values `(L_n, L_{n-1})` scaled by `exp(-log_scale)`, so large orders
/// and far-out nodes do not overflow.
fn laguerre_pair_scaled(n: usize, a: f64, x: f64) -> (f64, f64, f64) {
    let mut log_scale = 0.0;
    let mut prev = 1.0;
    let mut cur = 1.0 + a - x;
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if m > 1e100 {
            prev /= m;
            cur /= m;
            log_scale += m.ln();
        }
    }
    (cur, prev, log_scale)
}

/// Gauss–Laguerre rule for the weight `t^exponent e^{-t}`.
pub fn gauss_laguerre(order: usize, exponent: f64) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::Config("Gauss–Laguerre order must be positive".into()));
    }
    if !(exponent > -1.0) {
        return Err(domain("gauss_laguerre", format!("exponent {exponent} must exceed -1")));
    }
    let n = order;
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + exponent + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|k| (k as f64 * (k as f64 + exponent)).sqrt()).collect();
    let (mut nodes, _) = tridiagonal_eig(&diag, &off, false)?;

    let nf = n as f64;
    // Gamma(n + a + 1) / n! as Gamma(a + 1) prod (1 + a/k); lgamma at large
    // arguments would cost about 1e-13 relative in every weight.
    let log_norm = ln_gamma_pos(exponent + 1.0) + (1..=n).map(|k| (exponent / k as f64).ln_1p()).sum::<f64>();
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        // Newton polish: L_n / L_n' with x L_n' = n L_n - (n + a) L_{n-1}.
        for _ in 0..3 {
            let (ln, lnm1, _) = laguerre_pair_scaled(n, exponent, *x);
            let deriv = (nf * ln - (nf + exponent) * lnm1) / *x;
            if deriv == 0.0 || !deriv.is_finite() {
                break;
            }
            let step = ln / deriv;
            if !step.is_finite() || step.abs() > 1e-3 * x.abs().max(1e-3) {
                break;
            }
            *x -= step;
        }
        let (ln, lnm1, log_scale) = laguerre_pair_scaled(n, exponent, *x);
        let deriv = (nf * ln - (nf + exponent) * lnm1) / *x;
        let log_w = log_norm - x.ln() - 2.0 * (deriv.abs().ln() + log_scale);
        weights.push(if log_w.is_finite() { log_w.exp() } else { 0.0 });
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        kind: RuleKind::GaussLaguerre { order, exponent },
    })
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Gauss–Legendre rule on `[lo, hi]`.
pub fn gauss_legendre(order: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::Config("Gauss–Legendre order must be positive".into()));
    }
    if !(hi > lo) {
        return Err(domain("gauss_legendre", format!("empty interval [{lo}, {hi}]")));
    }
    let n = order;
    let nf = n as f64;
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let (mut nodes, _) = tridiagonal_eig(&diag, &off, false)?;
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..2 {
            let (p, pm1) = legendre_pair(n, *x);
            let dp = nf * (*x * p - pm1) / (*x * *x - 1.0);
            if dp != 0.0 && dp.is_finite() {
                *x -= p / dp;
            }
        }
        let (p, pm1) = legendre_pair(n, *x);
        let dp = nf * (*x * p - pm1) / (*x * *x - 1.0);
        weights.push(half * 2.0 / ((1.0 - *x * *x) * dp * dp));
        *x = mid + half * *x;
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        kind: RuleKind::GaussLegendre { order, lo, hi },
    })
}

/// Composite Gauss–Legendre on `[lo, hi]` with `panels` equal panels.
pub fn composite_legendre(order: usize, panels: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    let base = gauss_legendre(order, -1.0, 1.0)?;
    let panels = panels.max(1);
    let width = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(order * panels);
    let mut weights = Vec::with_capacity(order * panels);
    for p in 0..panels {
        let a = lo + p as f64 * width;
        for (x, w) in base.pairs() {
            nodes.push(a + 0.5 * width * (x + 1.0));
            weights.push(0.5 * width * w);
        }
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        kind: RuleKind::GaussLegendre { order, lo, hi },
    })
}

/// `int_0^inf t^(alpha + shift) e^(-t) L_n^alpha(t)^2 dt` for `shift` in `{-1, 0}`,
/// by Gauss–Laguerre quadrature with exponent `alpha + shift`.
pub fn quad_laguerre_norm(params: PolyParams, shift: i32) -> Result<f64> {
    params.validate()?;
    if !(shift == 0 || shift == -1) {
        return Err(domain("quad_laguerre_norm", format!("shift {shift} not in {{-1, 0}}")));
    }
    let exponent = params.alpha + shift as f64;
    if !(exponent > -1.0) {
        return Err(domain(
            "quad_laguerre_norm",
            format!("alpha + shift = {exponent} must exceed -1"),
        ));
    }
    // Exact once 2 * order - 1 >= 2n.
    let rule = gauss_laguerre((params.n + 2).max(40), exponent)?;
    Ok(rule.integrate(|t| {
        let l = laguerre_unchecked(params.n, params.alpha, t);
        l * l
    }))
}

/// Closed form of [`quad_laguerre_norm`]: `Gamma(n+alpha+1)/n!`, divided by `alpha` when `shift = -1`.
pub fn laguerre_norm_closed(params: PolyParams, shift: i32) -> f64 {
    let base = (ln_gamma_pos(params.n as f64 + params.alpha + 1.0) - ln_gamma_pos(params.n as f64 + 1.0)).exp();
    if shift == -1 {
        base / params.alpha
    } else {
        base
    }
}
