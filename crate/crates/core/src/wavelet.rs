//! Laguerre mother wavelets on the Hardy space, held in the frequency domain.
//!
//! Inner products use `<f, g> = int_0^inf f^(xi) conj(g^(xi)) d xi` and the
//! wavelet transform is `W_psi f(z) = <f, pi(z) psi>` with
//! `(pi(z) psi)^(xi) = sqrt(s) psi^(s xi) e^{-i x xi}`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::hyperbolic::{principal_pow, HPoint};
use crate::specfun::{
    composite_legendre, gauss_laguerre, gauss_legendre, laguerre_complex, laguerre_unchecked, log_gamma, quad_laguerre_norm,
    PolyParams, QuadratureRule,
};

/// Relative agreement required between successive quadrature refinements.
pub const REFINEMENT_TOLERANCE: f64 = 1e-10;

/// Gauss–Laguerre orders used for exponential-class inner products.
pub const LAGUERRE_ORDERS: [usize; 2] = [80, 160];

/// `(n, alpha)` for the mother wavelet `psi_n^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveletParams {
    pub n: usize,
    pub alpha: f64,
}

impl WaveletParams {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        let p = Self { n, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::DivergentAdmissibility { alpha: self.alpha });
        }
        Ok(())
    }

    /// Phase exponent `2n + alpha + 1` of the associated representation.
    pub fn weight(&self) -> f64 {
        2.0 * self.n as f64 + self.alpha + 1.0
    }

    fn poly(&self) -> PolyParams {
        PolyParams {
            n: self.n,
            alpha: self.alpha,
            beta: 0.0,
        }
    }
}

/// Entire function evaluated at complex arguments.
pub type Analytic = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Real-frequency evaluator for compactly supported functions.
pub type Evaluator = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A function of frequency `xi > 0`, tagged with its decay class.
#[derive(Clone)]
pub enum FreqFunction {
    /// `xi^power e^{-rate xi} h(xi)` with `Re rate > 0` and `h` entire of
    /// at most polynomial growth in the right half-plane.
    Exponential {
        power: f64,
        rate: Complex64,
        h: Analytic,
    },
    /// Supported in `[lo, hi]`.
    Compact { lo: f64, hi: f64, f: Evaluator },
    /// Finite linear combination.
    Sum(Vec<(Complex64, FreqFunction)>),
}

impl fmt::Debug for FreqFunction {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FreqFunction::Exponential { power, rate, .. } => {
                write!(fm, "Exponential {{ power: {power}, rate: {rate} }}")
            }
            FreqFunction::Compact { lo, hi, .. } => write!(fm, "Compact {{ lo: {lo}, hi: {hi} }}"),
            FreqFunction::Sum(terms) => fm.debug_list().entries(terms.iter().map(|(c, f)| (c, f))).finish(),
        }
    }
}

impl FreqFunction {
    pub fn evaluate(&self, xi: f64) -> Complex64 {
        if !(xi > 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        match self {
            FreqFunction::Exponential { power, rate, h } => {
                xi.powf(*power) * (-rate * xi).exp() * h(Complex64::new(xi, 0.0))
            }
            FreqFunction::Compact { lo, hi, f } => {
                if xi >= *lo && xi <= *hi {
                    f(xi)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            FreqFunction::Sum(terms) => terms.iter().map(|(c, f)| c * f.evaluate(xi)).sum(),
        }
    }

    /// `c * self`.
    pub fn scaled(self, c: Complex64) -> Self {
        FreqFunction::Sum(vec![(c, self)])
    }

    /// The control wavelet `xi e^{-xi^2}`, cut at `xi = 8` where it is below `1e-26`.
    pub fn control_wavelet() -> Self {
        FreqFunction::Compact {
            lo: 0.0,
            hi: 8.0,
            f: Arc::new(|xi| Complex64::new(xi * (-xi * xi).exp(), 0.0)),
        }
    }
}

/// `psi_n^alpha` as a [`FreqFunction`].
pub fn mother(p: WaveletParams) -> Result<FreqFunction> {
    p.validate()?;
    let (n, a) = (p.n, p.alpha);
    Ok(FreqFunction::Exponential {
        power: 0.5 * a,
        rate: Complex64::new(1.0, 0.0),
        h: Arc::new(move |zeta| laguerre_complex(n, a, 2.0 * zeta)),
    })
}

/// `psi^_n^alpha(xi) = xi^{alpha/2} e^{-xi} L_n^alpha(2 xi)`.
pub fn mother_hat(p: WaveletParams, xi: f64) -> Result<f64> {
    p.validate()?;
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(domain("mother_hat", format!("frequency {xi} must be positive")));
    }
    Ok(xi.powf(0.5 * p.alpha) * (-xi).exp() * laguerre_unchecked(p.n, p.alpha, 2.0 * xi))
}

/// `2^{-alpha} Gamma(n + alpha + 1) / (n! alpha)`.
pub fn admissibility_closed(p: WaveletParams) -> Result<f64> {
    p.validate()?;
    let n = p.n as f64;
    let lg = log_gamma(n + p.alpha + 1.0)? - log_gamma(n + 1.0)?;
    Ok((lg - p.alpha * std::f64::consts::LN_2).exp() / p.alpha)
}

/// `2^{-alpha-1} Gamma(n + alpha + 1) / n!`.
pub fn norm_sq_closed(p: WaveletParams) -> Result<f64> {
    Ok(0.5 * p.alpha * admissibility_closed(p)?)
}

fn check_agreement(closed: f64, quad: f64) -> Result<f64> {
    let diff = (closed - quad).abs();
    let tol = REFINEMENT_TOLERANCE * closed.abs();
    if diff > tol {
        return Err(Error::Accuracy {
            disagreement: diff,
            tolerance: tol,
        });
    }
    Ok(closed)
}

/// `C_psi = int |psi^|^2 / xi`, closed form checked against Gauss–Laguerre quadrature.
pub fn admissibility(p: WaveletParams) -> Result<f64> {
    let closed = admissibility_closed(p)?;
    // xi = t/2 maps the integral to 2^{-alpha} int t^{alpha-1} e^{-t} L^2 dt.
    let quad = (-p.alpha * std::f64::consts::LN_2).exp() * quad_laguerre_norm(p.poly(), -1)?;
    check_agreement(closed, quad)
}

/// `||psi||^2 = int |psi^|^2`, closed form checked against quadrature.
pub fn norm_sq(p: WaveletParams) -> Result<f64> {
    let closed = norm_sq_closed(p)?;
    let quad = (-(p.alpha + 1.0) * std::f64::consts::LN_2).exp() * quad_laguerre_norm(p.poly(), 0)?;
    check_agreement(closed, quad)
}

fn laguerre_rule(order: usize, exponent: f64) -> Result<Arc<QuadratureRule>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (order, exponent.to_bits());
    if let Some(r) = cache.lock().expect("rule cache").get(&key) {
        return Ok(r.clone());
    }
    let rule = Arc::new(gauss_laguerre(order, exponent)?);
    cache.lock().expect("rule cache").insert(key, rule.clone());
    Ok(rule)
}

/// Two refinements plus an absolute scale for the tolerance.
fn refined<F>(mut eval: F) -> Result<Complex64>
where
    F: FnMut(usize) -> Result<(Complex64, f64)>,
{
    let (coarse, _) = eval(0)?;
    let (fine, scale) = eval(1)?;
    let diff = (fine - coarse).norm();
    let tol = REFINEMENT_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    if diff > tol {
        return Err(Error::Accuracy {
            disagreement: diff,
            tolerance: tol,
        });
    }
    Ok(fine)
}

fn exp_exp(pf: f64, kf: Complex64, hf: &Analytic, pg: f64, kg: Complex64, hg: &Analytic) -> Result<Complex64> {
    let k = kf + kg.conj();
    if !(k.re > 0.0) {
        return Err(domain("inner_product_freq", format!("combined decay rate {k} has no positive real part")));
    }
    let a = pf + pg;
    if !(a > -1.0) {
        return Err(domain("inner_product_freq", format!("power {a} is not integrable at 0")));
    }
    // int xi^a e^{-K xi} h_f(xi) conj(h_g(xi)) d xi, rotated onto t = K xi.
    let pref = principal_pow(k, -a - 1.0);
    let kinv = k.inv();
    refined(|level| {
        let rule = laguerre_rule(LAGUERRE_ORDERS[level], a)?;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut abs = 0.0;
        for (t, w) in rule.pairs() {
            let zeta = t * kinv;
            let v = hf(zeta) * hg(zeta.conj()).conj();
            sum += w * v;
            abs += w * v.norm();
        }
        Ok((pref * sum, pref.norm() * abs))
    })
}

/// Composite Gauss–Legendre whose first panel is split geometrically toward
/// `lo = 0`, where Hardy-space functions may behave like `xi^p`.
fn graded_legendre(order: usize, panels: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    let uniform = composite_legendre(order, panels, lo, hi)?;
    if lo != 0.0 {
        return Ok(uniform);
    }
    let width = hi / panels as f64;
    let mut nodes: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let base = gauss_legendre(order, -1.0, 1.0)?;
    let mut right = width;
    for _ in 0..40 {
        // Panel [right/2, right]: centre 3 right / 4, half-width right / 4.
        for (t, w) in base.pairs() {
            nodes.push(0.75 * right + 0.25 * right * t);
            weights.push(0.25 * right * w);
        }
        right *= 0.5;
    }
    for (x, w) in uniform.pairs().skip(order) {
        nodes.push(x);
        weights.push(w);
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        kind: uniform.kind,
    })
}

fn compact_with(lo: f64, hi: f64, f: &Evaluator, g: &FreqFunction, f_is_left: bool) -> Result<Complex64> {
    if hi <= lo {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (lo, hi) = match g {
        FreqFunction::Compact { lo: l2, hi: h2, .. } => (lo.max(*l2), hi.min(*h2)),
        _ => (lo, hi),
    };
    if hi <= lo {
        return Ok(Complex64::new(0.0, 0.0));
    }
    refined(|level| {
        let rule = graded_legendre(24, 32 << level, lo, hi)?;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut abs = 0.0;
        for (x, w) in rule.pairs() {
            let v = if f_is_left {
                f(x) * g.evaluate(x).conj()
            } else {
                g.evaluate(x) * f(x).conj()
            };
            sum += w * v;
            abs += w * v.norm();
        }
        Ok((sum, abs))
    })
}

/// `<f, g> = int_0^inf f^ conj(g^) d xi`.
pub fn inner_product_freq(f: &FreqFunction, g: &FreqFunction) -> Result<Complex64> {
    use FreqFunction::*;
    match (f, g) {
        (Sum(terms), _) => terms
            .iter()
            .map(|(c, t)| inner_product_freq(t, g).map(|v| c * v))
            .sum(),
        (_, Sum(terms)) => terms
            .iter()
            .map(|(c, t)| inner_product_freq(f, t).map(|v| c.conj() * v))
            .sum(),
        (
            Exponential {
                power: pf,
                rate: kf,
                h: hf,
            },
            Exponential {
                power: pg,
                rate: kg,
                h: hg,
            },
        ) => exp_exp(*pf, *kf, hf, *pg, *kg, hg),
        (Compact { lo, hi, f: ff }, _) => compact_with(*lo, *hi, ff, g, true),
        (_, Compact { lo, hi, f: gg }) => compact_with(*lo, *hi, gg, f, false),
    }
}

/// `(pi(z) f)^(xi) = sqrt(s) f^(s xi) e^{-i x xi}`.
pub fn pi_transform(f: &FreqFunction, z: HPoint) -> FreqFunction {
    let (x, s) = (z.x, z.s);
    match f {
        FreqFunction::Exponential { power, rate, h } => {
            let h = h.clone();
            let c = s.sqrt() * s.powf(*power);
            FreqFunction::Exponential {
                power: *power,
                rate: rate * s + Complex64::new(0.0, x),
                h: Arc::new(move |zeta| c * h(s * zeta)),
            }
        }
        FreqFunction::Compact { lo, hi, f } => {
            let f = f.clone();
            let r = s.sqrt();
            FreqFunction::Compact {
                lo: lo / s,
                hi: hi / s,
                f: Arc::new(move |xi| r * f(s * xi) * Complex64::new(0.0, -x * xi).exp()),
            }
        }
        FreqFunction::Sum(terms) => FreqFunction::Sum(terms.iter().map(|(c, t)| (*c, pi_transform(t, z))).collect()),
    }
}

/// `W_psi f(z) = <f, pi(z) psi>` for an arbitrary analyzing function `psi`.
pub fn transform_with(f: &FreqFunction, psi: &FreqFunction, z: HPoint) -> Result<Complex64> {
    inner_product_freq(f, &pi_transform(psi, z))
}

/// `W_psi f(z) = sqrt(s) int f^(xi) conj(psi^(s xi)) e^{i x xi} d xi` with `psi = psi_n^alpha`.
pub fn wavelet_transform(f: &FreqFunction, p: WaveletParams, z: HPoint) -> Result<Complex64> {
    transform_with(f, &mother(p)?, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wp(n: usize, a: f64) -> WaveletParams {
        WaveletParams::new(n, a).unwrap()
    }

    #[test]
    fn mother_examples() {
        assert!((mother_hat(wp(0, 2.0), 1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(mother_hat(wp(1, 1.0), 1.0).unwrap().abs() < 1e-15);
        assert!(mother_hat(wp(0, 1.0), 1e-12).unwrap() < 1e-5);
        assert!(mother_hat(wp(0, 1.0), 0.0).is_err());
        assert!(mother_hat(wp(0, 1.0), -1.0).is_err());
        let f = mother(wp(3, 2.3)).unwrap();
        for xi in [0.1, 0.7, 2.0, 5.5] {
            assert!((f.evaluate(xi).re - mother_hat(wp(3, 2.3), xi).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn admissibility_examples() {
        assert!((admissibility(wp(0, 1.0)).unwrap() - 0.5).abs() < 1e-14);
        assert!((admissibility(wp(0, 2.0)).unwrap() - 0.25).abs() < 1e-14);
        assert!(matches!(
            WaveletParams::new(0, 0.0),
            Err(Error::DivergentAdmissibility { .. })
        ));
        assert!(matches!(
            admissibility(WaveletParams { n: 0, alpha: -1.0 }),
            Err(Error::DivergentAdmissibility { .. })
        ));
    }

    #[test]
    fn norm_examples() {
        assert!((norm_sq(wp(0, 1.0)).unwrap() - 0.25).abs() < 1e-14);
        assert!((norm_sq(wp(0, 3.0)).unwrap() - 0.375).abs() < 1e-14);
        norm_sq(wp(2, 1.0)).unwrap();
    }

    #[test]
    fn ratio_is_two_over_alpha() {
        for n in 0..=6 {
            for a in [0.5, 1.0, 2.3, 4.0] {
                let p = wp(n, a);
                let r = admissibility(p).unwrap() / norm_sq(p).unwrap();
                assert!((r - 2.0 / a).abs() < 1e-12 * r, "n={n} a={a}");
            }
        }
    }

    #[test]
    fn inner_product_examples() {
        let p0 = mother(wp(0, 1.0)).unwrap();
        let p1 = mother(wp(1, 1.0)).unwrap();
        assert!((inner_product_freq(&p0, &p0).unwrap() - 0.25).norm() < 1e-13);
        // Laguerre orthogonality: int xi e^{-2 xi} (2 - 2 xi) = 0.
        assert!(inner_product_freq(&p0, &p1).unwrap().norm() < 1e-13);
    }

    #[test]
    fn transform_examples() {
        let p = wp(0, 1.0);
        let f = mother(p).unwrap();
        let w = wavelet_transform(&f, p, HPoint::I).unwrap();
        assert!((w - 0.25).norm() < 1e-13);
        // sqrt(2) int xi^{1/2} (2 xi)^{1/2} e^{-3 xi} = 2/9.
        let w = wavelet_transform(&f, p, HPoint::new(0.0, 2.0).unwrap()).unwrap();
        assert!((w - 2.0 / 9.0).norm() < 1e-13);
    }

    #[test]
    fn compact_matches_exponential() {
        // The mother wavelet cut at xi = 40 is indistinguishable from the full one.
        let p = wp(2, 1.5);
        let full = mother(p).unwrap();
        let cut = FreqFunction::Compact {
            lo: 0.0,
            hi: 40.0,
            f: Arc::new(move |xi| Complex64::new(mother_hat(p, xi).unwrap(), 0.0)),
        };
        let z = HPoint::new(0.3, 0.8).unwrap();
        let a = transform_with(&full, &full, z).unwrap();
        let b = transform_with(&cut, &full, z).unwrap();
        let c = transform_with(&full, &cut, z).unwrap();
        assert!((a - b).norm() < 1e-11, "{a} {b}");
        assert!((a - c).norm() < 1e-11, "{a} {c}");
    }

    #[test]
    fn sums_are_linear() {
        let f = mother(wp(0, 2.0)).unwrap();
        let g = mother(wp(1, 2.0)).unwrap();
        let c = Complex64::new(0.3, -1.2);
        let s = FreqFunction::Sum(vec![(Complex64::new(1.0, 0.0), f.clone()), (c, g.clone())]);
        let lhs = inner_product_freq(&s, &f).unwrap();
        let rhs = inner_product_freq(&f, &f).unwrap() + c * inner_product_freq(&g, &f).unwrap();
        assert!((lhs - rhs).norm() < 1e-13);
        let lhs = inner_product_freq(&f, &s).unwrap();
        let rhs = inner_product_freq(&f, &f).unwrap() + c.conj() * inner_product_freq(&f, &g).unwrap();
        assert!((lhs - rhs).norm() < 1e-13);
    }
}
