//! Spectral diagnostics: Gram matrices of orbit systems, the Nyström
//! discretization of the localization operator, and Nyquist-ratio reports.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{hermitian_eigh, CMatrix};
use crate::error::{Error, Result};
use crate::fuchsian::{enumerate_ball, GroupPresentation, OrbitSet};
use crate::hyperbolic::{DomainSpec, HPoint, HyperbolicRule};
use crate::kernel::{kernel_value, SuperParams};
use crate::wavelet::{admissibility_closed, WaveletParams};

/// Relative Hermitian tolerance accepted by [`hermitian_eig`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Interlacing slack relative to the largest eigenvalue.
pub const INTERLACING_TOLERANCE: f64 = 1e-9;

/// Default cusp truncation height.
pub const DEFAULT_TRUNCATION: f64 = 10.0;

/// Scalar wavelet parameters or a super-wavelet stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum KernelParams {
    Scalar(WaveletParams),
    Super(SuperParams),
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelParams::Scalar(p) => p.validate(),
            KernelParams::Super(sp) => sp.validate(),
        }
    }

    /// Normalized kernel: diagonal `alpha / 2`, or `N (2B - N) / 2` for stacks.
    pub fn kernel(&self, z: HPoint, w: HPoint) -> Complex64 {
        match self {
            KernelParams::Scalar(p) => kernel_value(*p, z, w),
            KernelParams::Super(sp) => sp.levels().map(|p| kernel_value(p, z, w)).sum(),
        }
    }

    /// Kernel diagonal.
    pub fn diagonal(&self) -> f64 {
        match self {
            KernelParams::Scalar(p) => 0.5 * p.alpha,
            KernelParams::Super(sp) => sp.diagonal(),
        }
    }

    /// Per-level admissibility constants.
    fn constants(&self) -> Result<Vec<(WaveletParams, f64)>> {
        match self {
            KernelParams::Scalar(p) => Ok(vec![(*p, admissibility_closed(*p)?)]),
            KernelParams::Super(sp) => sp.levels().map(|p| Ok((p, admissibility_closed(p)?))).collect(),
        }
    }
}

/// How coincident orbit images are handled in a Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DuplicatePolicy {
    /// Keep every group element; coincident columns are flagged.
    Keep,
    /// Keep one column per distinct image.
    Merge,
}

/// `G[j][k] = <pi(z_k) psi, pi(z_j) psi> = C_psi k(z_j, z_k)` (summed over levels for stacks).
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub matrix: CMatrix,
    pub points: Vec<HPoint>,
    pub params: KernelParams,
    /// `(j, k)` with `k < j` whose points coincide.
    pub duplicates: Vec<(usize, usize)>,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.points.len()
    }
}

/// Gram matrix for an explicit point list.
pub fn gram_from_points(params: KernelParams, points: Vec<HPoint>) -> Result<GramMatrix> {
    params.validate()?;
    if points.is_empty() {
        return Err(Error::Degenerate("empty point set".into()));
    }
    let consts = params.constants()?;
    let n = points.len();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|k| {
                    consts
                        .iter()
                        .map(|(p, c)| *c * kernel_value(*p, points[j], points[k]))
                        .sum()
                })
                .collect()
        })
        .collect();
    let mut duplicates = Vec::new();
    for j in 0..n {
        for k in 0..j {
            let (a, b) = (points[j], points[k]);
            if (a.x - b.x).abs() <= 1e-9 * a.s && (a.s - b.s).abs() <= 1e-9 * a.s {
                duplicates.push((j, k));
            }
        }
    }
    Ok(GramMatrix {
        matrix: CMatrix::from_row_major(n, rows.into_iter().flatten().collect()),
        points,
        params,
        duplicates,
    })
}

/// Gram matrix of the orbit system, rows in orbit order.
pub fn gram_assemble(params: KernelParams, orbit: &OrbitSet, policy: DuplicatePolicy) -> Result<GramMatrix> {
    let points = match policy {
        DuplicatePolicy::Keep => orbit.images(),
        DuplicatePolicy::Merge => orbit.distinct_images(),
    };
    gram_from_points(params, points)
}

/// Eigenvalues in descending order with assembly metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub dim: usize,
    pub hermitian_defect: f64,
}

impl HermitianSpectrum {
    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

fn check_hermitian(m: &CMatrix) -> Result<f64> {
    let defect = m.hermitian_defect();
    let scale = m.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    if defect > HERMITIAN_TOLERANCE * scale {
        return Err(Error::NotHermitian { defect });
    }
    Ok(defect)
}

/// Full spectrum of a Hermitian matrix, descending.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianSpectrum> {
    let defect = check_hermitian(m)?;
    let (mut values, _) = hermitian_eigh(m, false)?;
    values.reverse();
    Ok(HermitianSpectrum {
        dim: m.dim(),
        eigenvalues: values,
        hermitian_defect: defect,
    })
}

/// One line of a Riesz scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszRow {
    pub radius: f64,
    pub count: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Extremal Gram eigenvalues for the orbit of `z` in growing balls.
///
/// The orbit is enumerated once at the largest radius; smaller balls are
/// leading principal submatrices, so Cauchy interlacing must hold and is
/// checked at `1e-9 * lambda_max`.
pub fn riesz_diagnostic(
    params: KernelParams,
    group: &GroupPresentation,
    z: HPoint,
    radii: &[f64],
    max_words: usize,
) -> Result<Vec<RieszRow>> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("radii must be non-empty and strictly increasing".into()));
    }
    let r_max = *radii.last().expect("non-empty");
    let orbit = enumerate_ball(group, z, r_max, max_words)?;
    if orbit.truncated {
        return Err(Error::Truncated {
            visited: orbit.visited,
            partial_count: orbit.len(),
        });
    }
    let gram = gram_assemble(params, &orbit, DuplicatePolicy::Keep)?;
    let mut rows: Vec<RieszRow> = Vec::with_capacity(radii.len());
    for &r in radii {
        let count = orbit.entries.iter().take_while(|e| e.distance < r).count();
        let spec = hermitian_eig(&gram.matrix.leading(count))?;
        let row = RieszRow {
            radius: r,
            count,
            lambda_min: spec.min(),
            lambda_max: spec.max(),
        };
        if let Some(prev) = rows.last() {
            let tol = INTERLACING_TOLERANCE * row.lambda_max;
            if row.lambda_min > prev.lambda_min + tol {
                return Err(Error::Interlacing {
                    radius: r,
                    detail: format!("lambda_min rose from {} to {}", prev.lambda_min, row.lambda_min),
                });
            }
            if row.lambda_max < prev.lambda_max - tol {
                return Err(Error::Interlacing {
                    radius: r,
                    detail: format!("lambda_max fell from {} to {}", prev.lambda_max, row.lambda_max),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// `M[j][k] = sqrt(w_j w_k) k(z_j, z_k)` on a quadrature of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct NystromOperator {
    pub nodes: Vec<HPoint>,
    pub weights: Vec<f64>,
    pub matrix: CMatrix,
    pub params: KernelParams,
    pub domain: String,
    /// `mu` area of the domain not covered by the rule (cusp above the truncation).
    pub area_deficit: Option<f64>,
    pub truncation: Option<f64>,
    pub resolution: usize,
}

/// Nyström matrix of the localization operator over `domain`.
///
/// Cusped domains need `truncate`; the removed area is reported.
pub fn nystrom_assemble(
    params: KernelParams,
    domain: &DomainSpec,
    resolution: usize,
    truncate: Option<f64>,
) -> Result<NystromOperator> {
    params.validate()?;
    if resolution < 8 {
        return Err(Error::Config(format!("resolution {resolution} below the minimum of 8 per axis")));
    }
    let (rule, deficit) = domain.quadrature(resolution, truncate)?;
    nystrom_from_rule(params, &rule, domain.name(), deficit, truncate, resolution)
}

/// Nyström matrix for an arbitrary rule.
pub fn nystrom_from_rule(
    params: KernelParams,
    rule: &HyperbolicRule,
    domain: String,
    area_deficit: Option<f64>,
    truncation: Option<f64>,
    resolution: usize,
) -> Result<NystromOperator> {
    if rule.is_empty() {
        return Err(Error::Degenerate("quadrature rule has no nodes".into()));
    }
    let n = rule.len();
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|k| sw[j] * sw[k] * params.kernel(rule.nodes[j], rule.nodes[k]))
                .collect()
        })
        .collect();
    Ok(NystromOperator {
        nodes: rule.nodes.clone(),
        weights: rule.weights.clone(),
        matrix: CMatrix::from_row_major(n, rows.into_iter().flatten().collect()),
        params,
        domain,
        area_deficit,
        truncation,
        resolution,
    })
}

/// `(tr, tr_2) = (sum w_j k(z_j, z_j), ||M||_F^2)`.
pub fn nystrom_trace_moments(op: &NystromOperator) -> (f64, f64) {
    let n = op.matrix.dim();
    let tr = (0..n).map(|j| op.matrix[(j, j)].re).sum();
    let tr2 = op.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum();
    (tr, tr2)
}

/// Spectrum of a Nyström operator with its first two moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenProfile {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub trace: f64,
    pub trace_sq: f64,
    /// Eigenvalues above one half.
    pub count_above_half: usize,
    /// Empirical CDF `(value, fraction of eigenvalues <= value)`, ascending.
    pub cdf: Vec<(f64, f64)>,
}

pub fn eigen_profile(op: &NystromOperator) -> Result<EigenProfile> {
    let spec = hermitian_eig(&op.matrix)?;
    let (trace, trace_sq) = nystrom_trace_moments(op);
    let n = spec.eigenvalues.len() as f64;
    let cdf = spec
        .eigenvalues
        .iter()
        .rev()
        .enumerate()
        .map(|(i, v)| (*v, (i + 1) as f64 / n))
        .collect();
    Ok(EigenProfile {
        count_above_half: spec.eigenvalues.iter().filter(|v| **v > 0.5).count(),
        eigenvalues: spec.eigenvalues,
        trace,
        trace_sq,
        cdf,
    })
}

/// What the necessary conditions rule out at this area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Area above the threshold: no frame / sampling sequence.
    FrameImpossible,
    /// Area below the threshold: no Riesz / interpolating sequence.
    RieszImpossible,
    /// At the threshold, or within three standard errors of it.
    Inconclusive,
}

impl Verdict {
    pub fn text(&self) -> &'static str {
        match self {
            Verdict::FrameImpossible => {
                "frame impossible: area exceeds the threshold, so the orbit system cannot be a frame (sampling sequence); nothing is claimed about Riesz sequences"
            }
            Verdict::RieszImpossible => {
                "Riesz sequence impossible: area is below the threshold, so the orbit system cannot be a Riesz (interpolating) sequence; nothing is claimed about frames"
            }
            Verdict::Inconclusive => "inconclusive: area at the threshold within its uncertainty; neither condition excludes anything",
        }
    }
}

/// Nyquist comparison for one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NyquistReport {
    pub params: KernelParams,
    pub area: f64,
    pub area_stderr: Option<f64>,
    /// `2 / alpha`, or `2 / (N (2B - N))` for stacks.
    pub threshold: f64,
    /// `area / threshold`.
    pub ratio: f64,
    /// `1 / (B - n - 1/2)` for each level of a stack.
    pub level_thresholds: Vec<f64>,
    pub verdict: Verdict,
    pub implication: String,
}

/// `2 / alpha`.
pub fn scalar_threshold(alpha: f64) -> f64 {
    2.0 / alpha
}

/// `1 / (B - n - 1/2)`.
pub fn level_threshold(b: f64, n: usize) -> f64 {
    1.0 / (b - n as f64 - 0.5)
}

/// `2 / (N (2B - N))`.
pub fn super_threshold(b: f64, levels: usize) -> f64 {
    let n = levels as f64;
    2.0 / (n * (2.0 * b - n))
}

/// Compares the domain area with the critical area of the necessary conditions.
pub fn nyquist_report(params: KernelParams, area: f64, area_stderr: Option<f64>) -> Result<NyquistReport> {
    params.validate()?;
    if !(area > 0.0) || !area.is_finite() {
        return Err(Error::Config(format!("domain area {area} must be positive and finite")));
    }
    let (threshold, level_thresholds) = match params {
        KernelParams::Scalar(p) => (scalar_threshold(p.alpha), Vec::new()),
        KernelParams::Super(sp) => (
            super_threshold(sp.b, sp.levels),
            (0..sp.levels).map(|n| level_threshold(sp.b, n)).collect(),
        ),
    };
    let ratio = area / threshold;
    let band = area_stderr.map_or(0.0, |e| 3.0 * e / threshold);
    let verdict = if ratio - 1.0 > band {
        Verdict::FrameImpossible
    } else if 1.0 - ratio > band {
        Verdict::RieszImpossible
    } else {
        Verdict::Inconclusive
    };
    Ok(NyquistReport {
        params,
        area,
        area_stderr,
        threshold,
        ratio,
        level_thresholds,
        verdict,
        implication: verdict.text().to_string(),
    })
}

/// Minimal-eigenvector combination of orbit atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingWitness {
    /// Coefficients `c` of `F = sum c_k pi(z_k) psi`, unit Euclidean norm.
    pub coefficients: Vec<Complex64>,
    /// `sum_j |<F, pi(z_j) psi>|^2 / ||F||^2 = lambda_min(G)`.
    pub residual: f64,
    /// `residual / diag(G)`.
    pub relative: f64,
    pub lambda_max: f64,
}

/// Finite proxy for a function vanishing on the orbit.
pub fn vanishing_witness(params: KernelParams, orbit: &OrbitSet) -> Result<VanishingWitness> {
    if orbit.len() < 2 {
        return Err(Error::Degenerate(format!("orbit has {} point(s); at least 2 needed", orbit.len())));
    }
    let first = orbit.entries[0].image;
    if orbit.entries.iter().all(|e| {
        (e.image.x - first.x).abs() <= 1e-9 * first.s && (e.image.s - first.s).abs() <= 1e-9 * first.s
    }) {
        return Err(Error::Degenerate("all orbit points coincide".into()));
    }
    let gram = gram_assemble(params, orbit, DuplicatePolicy::Keep)?;
    check_hermitian(&gram.matrix)?;
    let (values, vectors) = hermitian_eigh(&gram.matrix, true)?;
    let vectors = vectors.expect("requested eigenvectors");
    let n = gram.dim();
    let coefficients: Vec<Complex64> = (0..n).map(|i| vectors[(i, 0)]).collect();
    let diag = gram.matrix[(0, 0)].re;
    Ok(VanishingWitness {
        coefficients,
        residual: values[0],
        relative: values[0] / diag,
        lambda_max: values[n - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::GroupPresentation;
    use std::f64::consts::{PI, SQRT_2};

    fn scalar(n: usize, a: f64) -> KernelParams {
        KernelParams::Scalar(WaveletParams::new(n, a).unwrap())
    }

    fn pt(x: f64, s: f64) -> HPoint {
        HPoint::new(x, s).unwrap()
    }

    #[test]
    fn gram_examples() {
        let g = gram_from_points(scalar(0, 2.0), vec![HPoint::I]).unwrap();
        assert!((g.matrix[(0, 0)].re - 0.25).abs() < 1e-15);
        let g = gram_from_points(scalar(0, 2.0), vec![HPoint::I, pt(0.0, 2.0)]).unwrap();
        assert!((g.matrix[(0, 1)] - 0.25 * 16.0 * SQRT_2 / 27.0).norm() < 1e-15);
        assert!(g.matrix.hermitian_defect() < 1e-15);
        assert!(gram_from_points(scalar(0, 2.0), vec![]).is_err());
    }

    #[test]
    fn duplicate_flags_and_merge() {
        let grp = GroupPresentation::psl2z();
        let orbit = enumerate_ball(&grp, HPoint::I, 0.8, 10_000).unwrap();
        let keep = gram_assemble(scalar(0, 2.0), &orbit, DuplicatePolicy::Keep).unwrap();
        assert_eq!(keep.duplicates, vec![(1, 0)]);
        let merged = gram_assemble(scalar(0, 2.0), &orbit, DuplicatePolicy::Merge).unwrap();
        assert_eq!(merged.dim(), 1);
        assert!(merged.duplicates.is_empty());
    }

    #[test]
    fn not_hermitian_is_rejected() {
        let m = CMatrix::from_row_major(2, vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
        let s = hermitian_eig(&CMatrix::identity(4)).unwrap();
        assert!(s.eigenvalues.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn riesz_small_radius() {
        let grp = GroupPresentation::psl2z();
        let rows = riesz_diagnostic(scalar(0, 4.0), &grp, pt(0.0, 2.0), &[0.1, 0.2], 10_000).unwrap();
        for r in rows {
            assert_eq!(r.count, 1);
            assert!((r.lambda_min - 0.75).abs() < 1e-14);
            assert!((r.lambda_max - 0.75).abs() < 1e-14);
        }
        assert!(riesz_diagnostic(scalar(0, 4.0), &grp, pt(0.0, 2.0), &[0.2, 0.1], 10).is_err());
    }

    #[test]
    fn nystrom_rectangle_trace() {
        let dom = DomainSpec::rectangle(0.0, 1.0, 1.0, 2.0).unwrap();
        let op = nystrom_assemble(scalar(0, 2.0), &dom, 16, None).unwrap();
        let (tr, tr2) = nystrom_trace_moments(&op);
        assert!((tr - 0.5).abs() < 1e-10);
        assert!(tr2 <= tr);
        assert!(nystrom_assemble(scalar(0, 2.0), &dom, 4, None).is_err());
        assert!(nystrom_assemble(scalar(0, 2.0), &DomainSpec::modular_standard(), 16, None).is_err());
    }

    #[test]
    fn nyquist_examples() {
        let r = nyquist_report(scalar(0, 2.0), PI / 3.0, None).unwrap();
        assert_eq!(r.threshold, 1.0);
        assert_eq!(r.verdict, Verdict::FrameImpossible);
        let r = nyquist_report(scalar(0, 1.5), PI / 2.0, None).unwrap();
        assert!((r.threshold - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::FrameImpossible);
        let sp = SuperParams::new(2.6, 2).unwrap();
        let r = nyquist_report(KernelParams::Super(sp), 0.1, None).unwrap();
        assert!((r.threshold - 0.3125).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::RieszImpossible);
        assert!((r.level_thresholds[1] - 1.0 / 1.1).abs() < 1e-15);
        let r = nyquist_report(scalar(0, 2.0), 1.001, Some(0.01)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn witness_two_points() {
        let grp = GroupPresentation::psl2z();
        let orbit = enumerate_ball(&grp, pt(0.0, 2.0), 1.0, 1000).unwrap();
        assert!(orbit.len() >= 2);
        let w = vanishing_witness(scalar(0, 4.0), &orbit).unwrap();
        assert!(w.residual >= -1e-12 && w.residual <= 0.75);
        let one = enumerate_ball(&grp, pt(0.0, 2.0), 0.1, 1000).unwrap();
        assert!(matches!(vanishing_witness(scalar(0, 4.0), &one), Err(Error::Degenerate(_))));
    }
}
