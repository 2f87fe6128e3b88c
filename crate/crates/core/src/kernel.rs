//! Closed-form reproducing kernels of the wavelet spaces, the projective
//! representation acting on them, and the checks built on top: covariance,
//! projection, super-kernels, the Maass operator and rotation covariance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{principal_pow, GroupElement, HPoint, HyperbolicRule};
use crate::specfun::jacobi_unchecked;
use crate::wavelet::{admissibility_closed, inner_product_freq, mother, pi_transform, transform_with, FreqFunction, WaveletParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Kernel of `W_{psi_n^alpha}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub params: WaveletParams,
}

impl KernelSpec {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        Ok(Self {
            params: WaveletParams::new(n, alpha)?,
        })
    }

    pub fn eval(&self, z: HPoint, w: HPoint) -> Complex64 {
        kernel_value(self.params, z, w)
    }
}

/// `k(z, w) = 2^a a ((zb - w)/(z - wb))^n (sqrt(s v) / (-i (z - wb)))^{a+1} P_n^{(a,0)}(1 - 8 s v / |z - wb|^2)`.
///
/// Normalized so that `k(z, z) = alpha / 2` and `C_psi k(z, w) = <pi(w) psi, pi(z) psi>`.
pub fn kernel_value(p: WaveletParams, z: HPoint, w: HPoint) -> Complex64 {
    let (n, a) = (p.n, p.alpha);
    let diff = z.z() - w.conj();
    let sv = z.s * w.s;
    let base = sv.sqrt() / (-I * diff);
    // -i(z - wb) = (s + v) - i(x - u) lies in the right half-plane.
    assert!(base.re > 0.0, "kernel base {base} left the right half-plane");
    let ratio = (z.conj() - w.z()) / diff;
    let t = 1.0 - 8.0 * sv / diff.norm_sqr();
    let jac = jacobi_unchecked(n, a, 0.0, t);
    (2f64.powf(a) * a * jac) * ratio.powi(n as i32) * principal_pow(base, a + 1.0)
}

/// [`kernel_value`] with parameter validation.
pub fn kernel_eval(k: &KernelSpec, z: HPoint, w: HPoint) -> Result<Complex64> {
    k.params.validate()?;
    Ok(kernel_value(k.params, z, w))
}

/// `(B, N)` for the orthogonal sum of the first `N` Maass eigenspaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperParams {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "N")]
    pub levels: usize,
}

impl SuperParams {
    pub fn new(b: f64, levels: usize) -> Result<Self> {
        let sp = Self { b, levels };
        sp.validate()?;
        Ok(sp)
    }

    /// Number of eigenspaces for field strength `B`: `floor(B - 1/2) + 1`.
    pub fn max_levels(b: f64) -> usize {
        (b - 0.5).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.5) || !self.b.is_finite() {
            return Err(Error::Config(format!("field strength B = {} must exceed 1/2", self.b)));
        }
        let max = Self::max_levels(self.b);
        if self.levels == 0 || self.levels > max {
            return Err(Error::Config(format!(
                "N = {} outside 1..={max} for B = {}",
                self.levels, self.b
            )));
        }
        Ok(())
    }

    /// Parameters `(n, 2(B - n) - 1)` of level `n`.
    pub fn level(&self, n: usize) -> WaveletParams {
        WaveletParams {
            n,
            alpha: 2.0 * (self.b - n as f64) - 1.0,
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = WaveletParams> + '_ {
        (0..self.levels).map(|n| self.level(n))
    }

    /// `N (2B - N) / 2`.
    pub fn diagonal(&self) -> f64 {
        let n = self.levels as f64;
        0.5 * n * (2.0 * self.b - n)
    }
}

/// Sum of the level kernels.
pub fn super_kernel(sp: &SuperParams, z: HPoint, w: HPoint) -> Result<Complex64> {
    sp.validate()?;
    Ok(sp.levels().map(|p| kernel_value(p, z, w)).sum())
}

/// Element of the projective representation with phase exponent `s = 2n + alpha + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepElement {
    g: GroupElement,
    pub exponent: f64,
}

impl RepElement {
    /// Stores `g` in canonical sign; the phase depends on the representative.
    pub fn new(g: GroupElement, exponent: f64) -> Self {
        Self {
            g: g.canonical(),
            exponent,
        }
    }

    pub fn for_params(g: GroupElement, p: WaveletParams) -> Self {
        Self::new(g, p.weight())
    }

    pub fn element(&self) -> GroupElement {
        self.g
    }

    /// `(|cz + d| / (cz + d))^s`.
    pub fn phase(&self, z: HPoint) -> Complex64 {
        let den = self.g.denominator(z);
        principal_pow(den.norm() / den, self.exponent)
    }
}

/// `(tau(g) F)(z) = (|cz + d| / (cz + d))^s F(g(z))`.
pub fn rep_apply<F>(rep: RepElement, f: F) -> impl Fn(HPoint) -> Complex64
where
    F: Fn(HPoint) -> Complex64,
{
    move |z| rep.phase(z) * f(rep.g.apply(z))
}

fn unit(u: Complex64) -> Complex64 {
    u / u.norm()
}

/// `|(|cz+d|/(cz+d))^s k(g z, w) - ((-cw+a)/|-cw+a|)^s k(z, g^{-1} w)|` with `g` in canonical sign.
pub fn covariance_residual(k: &KernelSpec, g: &GroupElement, z: HPoint, w: HPoint) -> f64 {
    let g = g.canonical();
    let [a, _, c, _] = g.entries();
    let s = k.params.weight();
    let ginv = g.raw_inverse();
    let lhs = principal_pow(unit(g.denominator(z)).inv(), s) * k.eval(g.apply(z), w);
    let rhs = principal_pow(unit(-c * w.z() + a), s) * k.eval(z, ginv.apply(w));
    (lhs - rhs).norm()
}

/// Residuals of the three elementary relations behind the covariance
/// identity: the invariant cross-ratio, the phased square-root factor and
/// the phased ratio `(conj(gz) - w) / (gz - conj(w))`.
pub fn covariance_sub_residuals(g: &GroupElement, z: HPoint, w: HPoint) -> [f64; 3] {
    let g = g.canonical();
    let [a, _, c, _] = g.entries();
    let ginv = g.raw_inverse();
    let gz = g.apply(z);
    let giw = ginv.apply(w);
    let left_phase = unit(g.denominator(z)).inv();
    let right_phase = unit(-c * w.z() + a);

    let r1l = gz.s * w.s / (gz.z() - w.conj()).norm_sqr();
    let r1r = z.s * giw.s / (z.z() - giw.conj()).norm_sqr();

    let r2l = left_phase * (gz.s * w.s).sqrt() / (-I * (gz.z() - w.conj()));
    let r2r = right_phase * (z.s * giw.s).sqrt() / (-I * (z.z() - giw.conj()));

    let r3l = left_phase * left_phase * (gz.conj() - w.z()) / (gz.z() - w.conj());
    let r3r = right_phase * right_phase * (z.conj() - giw.z()) / (z.z() - giw.conj());

    [(r1l - r1r).abs(), (r2l - r2r).norm(), (r3l - r3r).norm()]
}

/// Under `dmu = dx ds / s^2` the closed-form kernel satisfies
/// `int k(z, u) k(u, w) dmu(u) = 2 pi k(z, w)`: the orthogonality constant of
/// the transform is `2 pi C_psi`, so the projection kernel is `k / (2 pi)`.
pub const REPRODUCING_FACTOR: f64 = 2.0 * std::f64::consts::PI;

/// Orthogonal projection onto the wavelet space,
/// `(P Phi)(z) = (1 / 2pi) int Phi(w) k(z, w) dmu(w)`, over the given rule.
pub fn project<F>(k: &KernelSpec, phi: F, z: HPoint, rule: &HyperbolicRule) -> Complex64
where
    F: Fn(HPoint) -> Complex64,
{
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(w, wt)| *wt * phi(*w) * k.eval(z, *w))
        .sum::<Complex64>()
        / REPRODUCING_FACTOR
}

/// Both sides of the identity `W_psi phi_gamma(z) = 2 pi C_psi tau(gamma^{-1}) (P Phi)(z)`,
/// where `phi_gamma = int Phi(w) ((cw+d)/|cw+d|)^s pi(gamma w) psi dmu(w)`.
///
/// The left side uses frequency-domain inner products for every node; the
/// right side uses the closed-form kernel. Both share `rule`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtherFamilyCheck {
    pub transform_side: Complex64,
    pub projection_side: Complex64,
}

impl OtherFamilyCheck {
    pub fn residual(&self) -> f64 {
        (self.transform_side - self.projection_side).norm()
    }
}

pub fn other_family_check<F>(
    p: WaveletParams,
    gamma: &GroupElement,
    phi: F,
    rule: &HyperbolicRule,
    z: HPoint,
) -> Result<OtherFamilyCheck>
where
    F: Fn(HPoint) -> Complex64,
{
    let psi = mother(p)?;
    let rep = RepElement::for_params(*gamma, p);
    let g = rep.element();
    let pz = pi_transform(&psi, z);
    let mut transform_side = Complex64::new(0.0, 0.0);
    for (w, wt) in rule.nodes.iter().zip(&rule.weights) {
        let phase = rep.phase(*w).conj();
        let ip = inner_product_freq(&pi_transform(&psi, g.apply(*w)), &pz)?;
        transform_side += *wt * phi(*w) * phase * ip;
    }
    let kspec = KernelSpec { params: p };
    let inv = RepElement::new(g.raw_inverse(), p.weight());
    let proj = |u: HPoint| project(&kspec, &phi, u, rule);
    let projection_side = REPRODUCING_FACTOR * admissibility_closed(p)? * rep_apply(inv, proj)(z);
    Ok(OtherFamilyCheck {
        transform_side,
        projection_side,
    })
}

/// `C_psi k(z, w)` against the frequency-domain `<pi(w) psi, pi(z) psi>`.
pub fn kernel_consistency(p: WaveletParams, z: HPoint, w: HPoint) -> Result<(Complex64, Complex64)> {
    let psi = mother(p)?;
    let closed = admissibility_closed(p)? * kernel_value(p, z, w);
    let quad = inner_product_freq(&pi_transform(&psi, w), &pi_transform(&psi, z))?;
    Ok((closed, quad))
}

/// Outcome of a finite-difference Maass operator check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaassCheck {
    /// Eigenvalue of the operator on the level, `(B - n)(1 - B + n)`.
    pub eigenvalue: f64,
    /// The value `(B - n)(B - n - 1)` with the opposite sign.
    pub unsigned_eigenvalue: f64,
    /// `|H_B F - eigenvalue F| / |F|` at the probe.
    pub residual: f64,
    /// `|H_B F - unsigned_eigenvalue F| / |F|` at the probe.
    pub residual_unsigned: f64,
    /// For `n = 0`: relative size of the anti-holomorphic derivative of
    /// `s^{-(alpha+1)/2} F`. Diagnostic only.
    pub holomorphy_defect: Option<f64>,
}

/// `(B - n)(B - n - 1)`.
pub fn maass_level_value(b: f64, n: usize) -> f64 {
    let m = b - n as f64;
    m * (m - 1.0)
}

fn stencil_d1(f: impl Fn(f64) -> Complex64, h: f64) -> Complex64 {
    (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
}

fn stencil_d2(f: impl Fn(f64) -> Complex64, f0: Complex64, h: f64) -> Complex64 {
    (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f0 + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h)
}

/// Richardson combination for a fourth-order stencil.
fn richardson(coarse: Complex64, fine: Complex64) -> Complex64 {
    (16.0 * fine - coarse) / 15.0
}

/// Applies `H_B = -s^2 (d_xx + d_ss) + 2 i B s d_x` by finite differences to
/// `F(w) = conj(k(z0, w))` with `alpha = 2(B - n) - 1` and compares with the
/// level eigenvalue.
pub fn maass_eigen_residual(b: f64, n: usize, z0: HPoint, probe: HPoint, h: f64) -> Result<MaassCheck> {
    if !(b > 0.5) {
        return Err(Error::Config(format!("field strength B = {b} must exceed 1/2")));
    }
    if n as f64 > (b - 0.5).floor() {
        return Err(Error::Config(format!("level n = {n} exceeds floor(B - 1/2) for B = {b}")));
    }
    if !(h > 0.0) || probe.s < 10.0 * h {
        return Err(Error::StepSize { s: probe.s, h });
    }
    let p = WaveletParams::new(n, 2.0 * (b - n as f64) - 1.0)?;
    let f = |w: HPoint| kernel_value(p, z0, w).conj();
    let at = |dx: f64, ds: f64| f(HPoint {
        x: probe.x + dx,
        s: probe.s + ds,
    });
    let f0 = f(probe);
    let derivs = |h: f64| {
        let fx = stencil_d1(|d| at(d, 0.0), h);
        let fxx = stencil_d2(|d| at(d, 0.0), f0, h);
        let fss = stencil_d2(|d| at(0.0, d), f0, h);
        (fx, fxx, fss)
    };
    let (x1, xx1, ss1) = derivs(h);
    let (x2, xx2, ss2) = derivs(0.5 * h);
    let fx = richardson(x1, x2);
    let fxx = richardson(xx1, xx2);
    let fss = richardson(ss1, ss2);
    let s = probe.s;
    let hf = -s * s * (fxx + fss) + 2.0 * I * b * s * fx;

    let unsigned = maass_level_value(b, n);
    let eigenvalue = -unsigned;
    let norm = f0.norm();
    let holomorphy_defect = (n == 0).then(|| {
        let e = -0.5 * (p.alpha + 1.0);
        let g = |dx: f64, ds: f64| (probe.s + ds).powf(e) * at(dx, ds);
        let gx = richardson(stencil_d1(|d| g(d, 0.0), h), stencil_d1(|d| g(d, 0.0), 0.5 * h));
        let gs = richardson(stencil_d1(|d| g(0.0, d), h), stencil_d1(|d| g(0.0, d), 0.5 * h));
        // d/dw-bar = (d_x + i d_s) / 2, d/dw = (d_x - i d_s) / 2.
        let dbar = 0.5 * (gx + I * gs);
        let d = 0.5 * (gx - I * gs);
        dbar.norm() / d.norm().max(f64::MIN_POSITIVE)
    });
    Ok(MaassCheck {
        eigenvalue,
        unsigned_eigenvalue: unsigned,
        residual: (hf - eigenvalue * f0).norm() / norm,
        residual_unsigned: (hf - unsigned * f0).norm() / norm,
        holomorphy_defect,
    })
}

/// `|(e^{i theta} / (z sin theta + cos theta))^s W^s(g_theta z) - W^s(z)|` with
/// `W^s(z) = Im(z)^{-s/2} W_psi psi(z)` for an arbitrary analyzing function.
pub fn rotation_residual_with(psi: &FreqFunction, s: f64, theta: f64, z: HPoint) -> Result<f64> {
    let g = GroupElement::rotation(theta);
    let gz = g.apply(z);
    let ws = |u: HPoint| -> Result<Complex64> { Ok(u.s.powf(-0.5 * s) * transform_with(psi, psi, u)?) };
    let factor = principal_pow(Complex64::from_polar(1.0, theta) / g.denominator(z), s);
    Ok((factor * ws(gz)? - ws(z)?).norm())
}

/// Rotation covariance residual for `psi_n^alpha` with `s = 2n + alpha + 1`.
pub fn rotation_covariance_residual(p: WaveletParams, theta: f64, z: HPoint) -> Result<f64> {
    rotation_residual_with(&mother(p)?, p.weight(), theta, z)
}

/// `max(1, |W^s(z)|)` for `psi_n^alpha`. Near the real axis `W^s` grows like
/// `Im(z)^{-s/2}`, so residuals are compared against this scale.
pub fn rotation_scale(p: WaveletParams, z: HPoint) -> Result<f64> {
    let psi = mother(p)?;
    Ok((z.s.powf(-0.5 * p.weight()) * transform_with(&psi, &psi, z)?).norm().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    fn pt(x: f64, s: f64) -> HPoint {
        HPoint::new(x, s).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let k = KernelSpec::new(0, 2.0).unwrap();
        assert!((k.eval(HPoint::I, HPoint::I) - 1.0).norm() < 1e-15);
        let v = k.eval(HPoint::I, pt(0.0, 2.0));
        assert!((v - 16.0 * SQRT_2 / 27.0).norm() < 1e-15, "{v}");
        for a in [0.5, 1.0, 2.3] {
            let k = KernelSpec::new(1, a).unwrap();
            let z = pt(0.3, 0.7);
            assert!((k.eval(z, z) - a / 2.0).norm() < 1e-14);
        }
    }

    #[test]
    fn hermitian_symmetry() {
        let k = KernelSpec::new(3, 2.3).unwrap();
        let (z, w) = (pt(-1.2, 0.4), pt(0.9, 2.5));
        assert!((k.eval(z, w) - k.eval(w, z).conj()).norm() < 1e-12);
    }

    #[test]
    fn super_kernel_examples() {
        let sp = SuperParams::new(2.6, 2).unwrap();
        let z = pt(0.1, 0.3);
        assert!((super_kernel(&sp, z, z).unwrap() - 3.2).norm() < 1e-12);
        let one = SuperParams::new(2.6, 1).unwrap();
        let w = pt(1.0, 1.0);
        let direct = kernel_value(WaveletParams::new(0, 4.2).unwrap(), z, w);
        assert!((super_kernel(&one, z, w).unwrap() - direct).norm() < 1e-15);
        assert!(SuperParams::new(2.6, 4).is_err());
        assert!(SuperParams::new(0.4, 1).is_err());
        assert_eq!(SuperParams::max_levels(3.2), 3);
    }

    #[test]
    fn covariance_examples() {
        let k = KernelSpec::new(2, 2.3).unwrap();
        let (z, w) = (pt(0.2, 1.4), pt(-0.7, 0.6));
        assert!(covariance_residual(&k, &GroupElement::IDENTITY, z, w) < 1e-15);
        let g = GroupElement::new(2.0, 1.0, 3.0, 2.0).unwrap();
        assert!(covariance_residual(&k, &g, z, w) < 1e-12);
        for r in covariance_sub_residuals(&g, z, w) {
            assert!(r < 1e-13);
        }
    }

    #[test]
    fn rep_identity_and_analytic_case() {
        let f = |z: HPoint| Complex64::new(z.x, z.s * z.s);
        let id = rep_apply(RepElement::new(GroupElement::IDENTITY, 3.5), f);
        let z = pt(0.4, 0.9);
        assert_eq!(id(z), f(z));
        let g = GroupElement::new(1.0, 2.0, 1.0, 3.0).unwrap();
        let rep = RepElement::for_params(g, WaveletParams::new(0, 1.5).unwrap());
        assert_eq!(rep.exponent, 2.5);
        assert!((rep_apply(rep, f)(z).norm() - f(g.apply(z)).norm()).abs() < 1e-14);
    }

    #[test]
    fn projection_reproduces_kernel() {
        let k = KernelSpec::new(0, 2.0).unwrap();
        let rule = HyperbolicRule::polar(pt(0.0, 1.4), 18.0, 36, 12, 64).unwrap();
        let z = pt(0.0, 2.0);
        let v = project(&k, |w| k.eval(HPoint::I, w).conj(), z, &rule);
        let want = k.eval(HPoint::I, z).conj();
        assert!((v - want).norm() < 1e-6, "{v} vs {want}");
        assert_eq!(project(&k, |_| Complex64::new(0.0, 0.0), z, &rule), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn consistency_example() {
        let p = WaveletParams::new(2, 1.7).unwrap();
        let (a, b) = kernel_consistency(p, pt(0.3, 0.5), pt(-1.0, 2.0)).unwrap();
        assert!((a - b).norm() < 1e-12, "{a} {b}");
    }

    #[test]
    fn maass_examples() {
        let z0 = pt(0.1, 1.2);
        let c = maass_eigen_residual(1.6, 0, z0, pt(0.5, 1.0), 1e-3).unwrap();
        assert!(c.residual < 1e-5, "{c:?}");
        assert!((c.eigenvalue + 0.96).abs() < 1e-15);
        assert!(c.residual_unsigned > 1.0);
        assert!(c.holomorphy_defect.unwrap() < 1e-6);
        let c = maass_eigen_residual(2.6, 1, z0, pt(-0.3, 0.8), 1e-3).unwrap();
        assert!(c.residual < 1e-5, "{c:?}");
        assert!(matches!(
            maass_eigen_residual(1.6, 0, z0, pt(0.0, 0.005), 1e-3),
            Err(Error::StepSize { .. })
        ));
        assert!(maass_eigen_residual(1.6, 2, z0, pt(0.0, 1.0), 1e-3).is_err());
    }

    #[test]
    fn rotation_examples() {
        let p = WaveletParams::new(0, 1.0).unwrap();
        let z = pt(0.4, 1.3);
        assert!(rotation_covariance_residual(p, 0.0, z).unwrap() < 1e-14);
        assert!(rotation_covariance_residual(p, PI / 5.0, z).unwrap() < 1e-8);
        // Frozen from an independent arbitrary-precision quadrature.
        let ctrl = rotation_residual_with(&FreqFunction::control_wavelet(), p.weight(), PI / 5.0, z).unwrap();
        assert!((ctrl - 3.957_633_815_843e-4).abs() < 1e-13, "{ctrl}");
    }
}
