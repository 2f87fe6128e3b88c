//! Upper half-plane geometry.
//!
//! Points `z = x + i s` with `s > 0`, Möbius maps in `PSL(2, R)`, the
//! invariant measure `dx ds / s^2`, geodesic distance and the fundamental
//! domains used in the experiments.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fuchsian::{enumerate_ball, GroupConfig, GroupPresentation};
use crate::specfun::gauss_legendre;

/// Name of the pseudo-random generator used for every Monte Carlo stream.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3), one stream per shard";

/// Number of independent Monte Carlo shards. Fixed so results do not
/// depend on the thread count.
pub const MC_SHARDS: u64 = 16;

/// A point `x + i s` of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub x: f64,
    pub s: f64,
}

impl HPoint {
    pub fn new(x: f64, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() || !x.is_finite() {
            return Err(domain("HPoint", format!("({x}, {s}) is not in the open upper half-plane")));
        }
        Ok(Self { x, s })
    }

    /// `i`, the usual base point.
    pub const I: HPoint = HPoint { x: 0.0, s: 1.0 };

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    #[inline]
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.s)
    }

    #[inline]
    pub fn conj(&self) -> Complex64 {
        Complex64::new(self.x, -self.s)
    }
}

/// A unit-determinant matrix representing an element of `PSL(2, R)`.
///
/// Constructors keep the entries as given; products and inverses return the
/// canonical representative, whose first nonzero entry in row-major order is
/// positive. Use [`GroupElement::canonical`] before comparing elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

const DET_TOLERANCE: f64 = 1e-12;

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Checks `ad - bc = 1` within `1e-12`.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det - 1.0).abs().le(&DET_TOLERANCE) {
            return Err(domain("GroupElement", format!("determinant {det} != 1")));
        }
        Ok(Self { a, b, c, d })
    }

    /// Normalizes any matrix with positive determinant.
    pub fn from_gl(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(domain("GroupElement", format!("determinant {det} must be positive")));
        }
        let r = det.sqrt();
        Ok(Self {
            a: a / r,
            b: b / r,
            c: c / r,
            d: d / r,
        })
    }

    /// `S = (0, -1; 1, 0)`, `z -> -1/z`.
    pub fn inversion() -> Self {
        Self {
            a: 0.0,
            b: -1.0,
            c: 1.0,
            d: 0.0,
        }
    }

    /// `z -> z + lambda`.
    pub fn translation(lambda: f64) -> Self {
        Self {
            a: 1.0,
            b: lambda,
            c: 0.0,
            d: 1.0,
        }
    }

    /// Rotation `(cos t, -sin t; sin t, cos t)` about `i`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { a: c, b: -s, c: s, d: c }
    }

    /// Affine map `z -> x + s z`.
    pub fn affine(p: HPoint) -> Self {
        let r = p.s.sqrt();
        Self {
            a: r,
            b: p.x / r,
            c: 0.0,
            d: 1.0 / r,
        }
    }

    /// The representative of `+-g` whose first nonzero entry is positive.
    pub fn canonical(self) -> Self {
        let scale = self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs());
        let eps = 1e-14 * scale;
        let lead = [self.a, self.b, self.c, self.d]
            .into_iter()
            .find(|v| v.abs() > eps)
            .unwrap_or(1.0);
        if lead < 0.0 {
            Self {
                a: -self.a,
                b: -self.b,
                c: -self.c,
                d: -self.d,
            }
        } else {
            self
        }
    }

    #[inline]
    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Product `self * other`, renormalized to unit determinant.
    pub fn mul(&self, o: &GroupElement) -> GroupElement {
        let a = self.a * o.a + self.b * o.c;
        let b = self.a * o.b + self.b * o.d;
        let c = self.c * o.a + self.d * o.c;
        let d = self.c * o.b + self.d * o.d;
        let det = a * d - b * c;
        let g = if det == 1.0 {
            GroupElement { a, b, c, d }
        } else {
            let r = det.sqrt();
            GroupElement {
                a: a / r,
                b: b / r,
                c: c / r,
                d: d / r,
            }
        };
        g.canonical()
    }

    /// Inverse `(d, -b; -c, a)` in canonical sign.
    pub fn inverse(&self) -> GroupElement {
        self.raw_inverse().canonical()
    }

    /// Inverse `(d, -b; -c, a)` without sign canonicalization.
    pub fn raw_inverse(&self) -> GroupElement {
        GroupElement {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// `g(z) = (a z + b) / (c z + d)`.
    pub fn apply(&self, z: HPoint) -> HPoint {
        let zc = z.z();
        let den = self.c * zc + self.d;
        let w = (self.a * zc + self.b) / den;
        // Im g(z) = Im z / |cz + d|^2 is computed directly so it stays positive.
        HPoint {
            x: w.re,
            s: z.s / den.norm_sqr(),
        }
    }

    /// `c z + d`.
    #[inline]
    pub fn denominator(&self, z: HPoint) -> Complex64 {
        self.c * z.z() + self.d
    }

    /// Largest entrywise distance to another element.
    pub fn max_entry_diff(&self, o: &GroupElement) -> f64 {
        self.entries()
            .iter()
            .zip(o.entries())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// `g(z)`.
pub fn moebius_apply(g: &GroupElement, z: HPoint) -> HPoint {
    g.apply(z)
}

/// Automorphy factor `j(g, z) = (c z + d)^{-1}`.
pub fn cocycle_j(g: &GroupElement, z: HPoint) -> Complex64 {
    g.denominator(z).inv()
}

/// Principal-branch power `u^p = exp(p (ln|u| + i Arg u))`, `Arg` in `(-pi, pi]`.
#[inline]
pub fn principal_pow(u: Complex64, p: f64) -> Complex64 {
    if u.im == 0.0 && u.re > 0.0 {
        return Complex64::new(u.re.powf(p), 0.0);
    }
    let arg = principal_arg(u);
    Complex64::from_polar(u.norm().powf(p), p * arg)
}

/// Argument in `(-pi, pi]`; the negative real axis maps to `+pi`.
#[inline]
pub fn principal_arg(u: Complex64) -> f64 {
    let a = u.im.atan2(u.re);
    if a == -PI {
        PI
    } else {
        a
    }
}

/// Hyperbolic distance, `cosh d = 1 + |z - w|^2 / (2 Im z Im w)`.
pub fn hyp_distance(z: HPoint, w: HPoint) -> f64 {
    let dx = z.x - w.x;
    let ds = z.s - w.s;
    let q = (dx * dx + ds * ds) / (2.0 * z.s * w.s);
    // acosh(1 + q) = ln(1 + q + sqrt(q (q + 2))), written to keep small q accurate.
    (q + (q * (q + 2.0)).sqrt()).ln_1p()
}

/// Area `4 pi sinh^2(r/2)` of a hyperbolic disc of radius `r`.
pub fn ball_area(r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(domain("ball_area", format!("radius {r} must be non-negative")));
    }
    let h = (0.5 * r).sinh();
    Ok(4.0 * PI * h * h)
}

/// Exact or estimated area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum AreaValue {
    Exact { value: f64 },
    Estimate { value: f64, stderr: f64 },
}

impl AreaValue {
    pub fn value(&self) -> f64 {
        match *self {
            AreaValue::Exact { value } | AreaValue::Estimate { value, .. } => value,
        }
    }

    pub fn stderr(&self) -> Option<f64> {
        match *self {
            AreaValue::Exact { .. } => None,
            AreaValue::Estimate { stderr, .. } => Some(stderr),
        }
    }
}

/// Serializable description of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainKind {
    /// `|x| <= 1/2`, `|z| >= 1`. Boundary convention: `-1/2 <= x < 1/2`,
    /// and the unit arc belongs to the domain only for `x <= 0`.
    ModularStandard,
    /// `|x| <= lambda_q / 2`, `|z| >= 1`, same half-open convention.
    Hecke { q: u32 },
    /// `x0 <= x < x1`, `s0 <= s < s1`.
    Rectangle { x: [f64; 2], s: [f64; 2] },
    /// Points at least as close to `center` as to any other orbit point of
    /// `center` within `2 * word_radius`. Ties go to the domain.
    Dirichlet {
        center: HPoint,
        group: GroupConfig,
        word_radius: f64,
        /// Bounding box `[x0, x1] x [s0, s1]`; `s1 = null` means a cusp at infinity.
        bbox_x: [f64; 2],
        bbox_s: [f64; 2],
        #[serde(default)]
        cusp: bool,
    },
}

/// Wire form of [`DomainSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    #[serde(flatten)]
    pub kind: DomainKind,
    /// Optional user-declared area; checked against Monte Carlo in tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
}

/// Axis-aligned bounding box; `s1 = None` extends to the cusp at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x0: f64,
    pub x1: f64,
    pub s0: f64,
    pub s1: Option<f64>,
}

impl BoundingBox {
    /// `mu` mass of the box.
    pub fn mass(&self) -> f64 {
        let top = self.s1.map_or(0.0, |s1| 1.0 / s1);
        (self.x1 - self.x0) * (1.0 / self.s0 - top)
    }

    /// Draws a point with density proportional to `1 / s^2` by inverse transform in `s`.
    pub fn sample(&self, rng: &mut impl Rng) -> HPoint {
        let x = self.x0 + (self.x1 - self.x0) * rng.gen::<f64>();
        let u: f64 = rng.gen();
        let top = self.s1.map_or(0.0, |s1| 1.0 / s1);
        // 1/s uniform on (top, 1/s0].
        let inv = 1.0 / self.s0 - u * (1.0 / self.s0 - top);
        HPoint { x, s: 1.0 / inv }
    }
}

/// A fundamental domain (or test region) with membership, bounding box and area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainConfig", into = "DomainConfig")]
pub struct DomainSpec {
    config: DomainConfig,
    /// Orbit images of the Dirichlet center (empty for other kinds).
    neighbors: Vec<HPoint>,
}

/// `lambda_q = 2 cos(pi / q)`, exact for `q = 3, 4, 6`.
pub fn hecke_lambda(q: u32) -> f64 {
    match q {
        3 => 1.0,
        4 => std::f64::consts::SQRT_2,
        6 => 3f64.sqrt(),
        _ => 2.0 * (PI / q as f64).cos(),
    }
}

impl TryFrom<DomainConfig> for DomainSpec {
    type Error = Error;
    fn try_from(config: DomainConfig) -> Result<Self> {
        let neighbors = match &config.kind {
            DomainKind::ModularStandard => Vec::new(),
            DomainKind::Hecke { q } => {
                if *q < 3 {
                    return Err(Error::Config(format!("Hecke q = {q} must be at least 3")));
                }
                Vec::new()
            }
            DomainKind::Rectangle { x, s } => {
                if !(x[1] > x[0]) || !(s[1] > s[0]) || !(s[0] > 0.0) {
                    return Err(Error::Config(format!("invalid rectangle x={x:?} s={s:?}")));
                }
                Vec::new()
            }
            DomainKind::Dirichlet {
                center,
                group,
                word_radius,
                bbox_x,
                bbox_s,
                ..
            } => {
                if !(bbox_x[1] > bbox_x[0]) || !(bbox_s[1] > bbox_s[0]) || !(bbox_s[0] > 0.0) {
                    return Err(Error::Config("invalid Dirichlet bounding box".into()));
                }
                let group = GroupPresentation::from_config(group)?;
                let orbit = enumerate_ball(&group, *center, 2.0 * word_radius, 200_000)?;
                orbit
                    .entries
                    .iter()
                    .filter(|e| e.distance > 1e-9)
                    .map(|e| e.image)
                    .collect()
            }
        };
        Ok(Self { config, neighbors })
    }
}

impl From<DomainSpec> for DomainConfig {
    fn from(d: DomainSpec) -> Self {
        d.config
    }
}

impl DomainSpec {
    pub fn modular_standard() -> Self {
        Self {
            config: DomainConfig {
                kind: DomainKind::ModularStandard,
                area: None,
            },
            neighbors: Vec::new(),
        }
    }

    pub fn hecke(q: u32) -> Result<Self> {
        DomainConfig {
            kind: DomainKind::Hecke { q },
            area: None,
        }
        .try_into()
    }

    pub fn rectangle(x0: f64, x1: f64, s0: f64, s1: f64) -> Result<Self> {
        DomainConfig {
            kind: DomainKind::Rectangle {
                x: [x0, x1],
                s: [s0, s1],
            },
            area: None,
        }
        .try_into()
    }

    pub fn from_config(config: DomainConfig) -> Result<Self> {
        config.try_into()
    }

    pub fn config(&self) -> &DomainConfig {
        &self.config
    }

    pub fn kind(&self) -> &DomainKind {
        &self.config.kind
    }

    pub fn name(&self) -> String {
        match &self.config.kind {
            DomainKind::ModularStandard => "modular-standard".into(),
            DomainKind::Hecke { q } => format!("hecke-{q}"),
            DomainKind::Rectangle { .. } => "rectangle".into(),
            DomainKind::Dirichlet { .. } => "dirichlet".into(),
        }
    }

    /// Half-width of the vertical strip for modular/Hecke domains.
    fn strip_half_width(&self) -> Option<f64> {
        match self.config.kind {
            DomainKind::ModularStandard => Some(0.5),
            DomainKind::Hecke { q } => Some(0.5 * hecke_lambda(q)),
            _ => None,
        }
    }

    pub fn contains(&self, z: HPoint) -> bool {
        match &self.config.kind {
            DomainKind::ModularStandard | DomainKind::Hecke { .. } => {
                let h = self.strip_half_width().unwrap_or(0.5);
                let r2 = z.x * z.x + z.s * z.s;
                z.x >= -h && z.x < h && (r2 > 1.0 || (r2 == 1.0 && z.x <= 0.0))
            }
            DomainKind::Rectangle { x, s } => z.x >= x[0] && z.x < x[1] && z.s >= s[0] && z.s < s[1],
            DomainKind::Dirichlet { center, .. } => {
                let d0 = hyp_distance(z, *center);
                self.neighbors.iter().all(|w| d0 <= hyp_distance(z, *w))
            }
        }
    }

    pub fn bounding_box(&self) -> BoundingBox {
        match &self.config.kind {
            DomainKind::ModularStandard | DomainKind::Hecke { .. } => {
                let h = self.strip_half_width().unwrap_or(0.5);
                BoundingBox {
                    x0: -h,
                    x1: h,
                    s0: (1.0 - h * h).sqrt(),
                    s1: None,
                }
            }
            DomainKind::Rectangle { x, s } => BoundingBox {
                x0: x[0],
                x1: x[1],
                s0: s[0],
                s1: Some(s[1]),
            },
            DomainKind::Dirichlet {
                bbox_x, bbox_s, cusp, ..
            } => BoundingBox {
                x0: bbox_x[0],
                x1: bbox_x[1],
                s0: bbox_s[0],
                s1: if *cusp { None } else { Some(bbox_s[1]) },
            },
        }
    }

    /// Closed-form area where one exists (Gauss–Bonnet or direct integration).
    pub fn exact_area(&self) -> Option<f64> {
        match &self.config.kind {
            DomainKind::ModularStandard => Some(PI / 3.0),
            DomainKind::Hecke { q } => Some(PI * (1.0 - 2.0 / *q as f64)),
            DomainKind::Rectangle { x, s } => Some((x[1] - x[0]) * (1.0 / s[0] - 1.0 / s[1])),
            DomainKind::Dirichlet { .. } => None,
        }
    }

    /// Best available area: exact, else the declared value.
    pub fn area(&self) -> Option<f64> {
        self.exact_area().or(self.config.area)
    }

    /// Width of the cusp strip, if the domain reaches infinity.
    pub fn cusp_width(&self) -> Option<f64> {
        match &self.config.kind {
            DomainKind::ModularStandard | DomainKind::Hecke { .. } => self.strip_half_width().map(|h| 2.0 * h),
            DomainKind::Dirichlet {
                bbox_x, cusp: true, ..
            } => Some(bbox_x[1] - bbox_x[0]),
            _ => None,
        }
    }

    /// Tensor Gauss–Legendre rule over the domain cut at height `truncate`.
    ///
    /// Returns the rule together with the exact `mu` area of the removed
    /// cusp region (zero for bounded domains; `None` when unknown).
    pub fn quadrature(&self, resolution: usize, truncate: Option<f64>) -> Result<(HyperbolicRule, Option<f64>)> {
        if resolution < 2 {
            return Err(Error::Config("quadrature resolution must be at least 2".into()));
        }
        match &self.config.kind {
            DomainKind::Rectangle { x, s } => {
                let top = truncate.map_or(s[1], |t| t.min(s[1]));
                let deficit = (x[1] - x[0]) * (1.0 / top - 1.0 / s[1]);
                let rule = HyperbolicRule::rectangle(x[0], x[1], s[0], top, resolution, resolution)?;
                Ok((rule, Some(deficit)))
            }
            DomainKind::ModularStandard | DomainKind::Hecke { .. } => {
                let h = self.strip_half_width().unwrap_or(0.5);
                let top = truncate.ok_or_else(|| {
                    Error::Config(format!("domain {} has a cusp; a truncation height is required", self.name()))
                })?;
                if !(top > 1.0) {
                    return Err(Error::Config(format!("truncation height {top} must exceed 1")));
                }
                let gx = gauss_legendre(resolution, -h, h)?;
                let base = gauss_legendre(resolution, -1.0, 1.0)?;
                let mut nodes = Vec::with_capacity(resolution * resolution);
                let mut weights = Vec::with_capacity(resolution * resolution);
                for (x, wx) in gx.pairs() {
                    let lo = (1.0 - x * x).sqrt();
                    let half = 0.5 * (top - lo);
                    for (t, wt) in base.pairs() {
                        let s = lo + half * (t + 1.0);
                        nodes.push(HPoint { x, s });
                        weights.push(wx * wt * half / (s * s));
                    }
                }
                Ok((
                    HyperbolicRule {
                        nodes,
                        weights,
                        description: format!("{} truncated at s={top}, {resolution}x{resolution} Gauss-Legendre", self.name()),
                    },
                    Some(2.0 * h / top),
                ))
            }
            DomainKind::Dirichlet { .. } => {
                let bb = self.bounding_box();
                let top = match (bb.s1, truncate) {
                    (Some(s1), Some(t)) => s1.min(t),
                    (Some(s1), None) => s1,
                    (None, Some(t)) => t,
                    (None, None) => {
                        return Err(Error::Config("Dirichlet domain with cusp needs a truncation height".into()))
                    }
                };
                let full = HyperbolicRule::rectangle(bb.x0, bb.x1, bb.s0, top, resolution, resolution)?;
                let (nodes, weights): (Vec<_>, Vec<_>) = full
                    .nodes
                    .iter()
                    .zip(&full.weights)
                    .filter(|(z, _)| self.contains(**z))
                    .map(|(z, w)| (*z, *w))
                    .unzip();
                // The removed cusp region is only bounded by the box, not known exactly.
                let deficit = bb.s1.is_some().then_some(0.0);
                Ok((
                    HyperbolicRule {
                        nodes,
                        weights,
                        description: format!("dirichlet bbox mask {resolution}x{resolution}"),
                    },
                    deficit,
                ))
            }
        }
    }
}

/// How to compute a domain area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum AreaMethod {
    GaussBonnet,
    MonteCarlo { samples: usize, seed: u64 },
}

/// Area of `dom` by Gauss–Bonnet (geodesic polygons only) or Monte Carlo.
pub fn domain_area(dom: &DomainSpec, method: AreaMethod) -> Result<AreaValue> {
    match method {
        AreaMethod::GaussBonnet => match dom.kind() {
            // Triangle with angles 0, pi/q, pi/q: area pi - 2 pi / q.
            DomainKind::ModularStandard => Ok(AreaValue::Exact {
                value: gauss_bonnet(&[0.0, PI / 3.0, PI / 3.0]),
            }),
            DomainKind::Hecke { q } => Ok(AreaValue::Exact {
                value: gauss_bonnet(&[0.0, PI / *q as f64, PI / *q as f64]),
            }),
            _ => Err(Error::UnsupportedMethod {
                method: "gauss-bonnet",
                domain: dom.name(),
            }),
        },
        AreaMethod::MonteCarlo { samples, seed } => {
            let est = monte_carlo(dom, samples, seed, |_| Complex64::new(1.0, 0.0));
            Ok(AreaValue::Estimate {
                value: est.value.re,
                stderr: est.stderr.unwrap_or(0.0),
            })
        }
    }
}

/// Area of a geodesic polygon from its interior angles.
pub fn gauss_bonnet(angles: &[f64]) -> f64 {
    (angles.len() as f64 - 2.0) * PI - angles.iter().sum::<f64>()
}

/// Quadrature nodes with `mu` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicRule {
    pub nodes: Vec<HPoint>,
    pub weights: Vec<f64>,
    pub description: String,
}

impl HyperbolicRule {
    /// Tensor Gauss–Legendre on `[x0, x1] x [s0, s1]` with weights `wx ws / s^2`.
    pub fn rectangle(x0: f64, x1: f64, s0: f64, s1: f64, nx: usize, ns: usize) -> Result<Self> {
        let gx = gauss_legendre(nx, x0, x1)?;
        let gs = gauss_legendre(ns, s0, s1)?;
        let mut nodes = Vec::with_capacity(nx * ns);
        let mut weights = Vec::with_capacity(nx * ns);
        for (x, wx) in gx.pairs() {
            for (s, ws) in gs.pairs() {
                nodes.push(HPoint { x, s });
                weights.push(wx * ws / (s * s));
            }
        }
        Ok(Self {
            nodes,
            weights,
            description: format!("rectangle [{x0},{x1}]x[{s0},{s1}], {nx}x{ns} Gauss-Legendre"),
        })
    }

    /// Chart `z = x_c + s_c e^u (t + i)` around `center`, where `mu` becomes `dt du`.
    ///
    /// `t` and `u` are covered by composite Gauss–Legendre panels.
    pub fn affine_chart(
        center: HPoint,
        t_range: [f64; 2],
        u_range: [f64; 2],
        panels: [usize; 2],
        order: usize,
    ) -> Result<Self> {
        let gt = crate::specfun::composite_legendre(order, panels[0], t_range[0], t_range[1])?;
        let gu = crate::specfun::composite_legendre(order, panels[1], u_range[0], u_range[1])?;
        let mut nodes = Vec::with_capacity(gt.len() * gu.len());
        let mut weights = Vec::with_capacity(gt.len() * gu.len());
        for (u, wu) in gu.pairs() {
            let e = u.exp();
            for (t, wt) in gt.pairs() {
                nodes.push(HPoint {
                    x: center.x + center.s * e * t,
                    s: center.s * e,
                });
                weights.push(wt * wu);
            }
        }
        Ok(Self {
            nodes,
            weights,
            description: format!(
                "affine chart at ({}, {}), t in {t_range:?}, u in {u_range:?}, panels {panels:?}, order {order}",
                center.x, center.s
            ),
        })
    }

    /// Geodesic polar coordinates about `center`: radius by composite
    /// Gauss–Legendre on `[0, r_max]`, angle by the trapezoid rule.
    /// The area element is `sinh r dr dtheta`.
    pub fn polar(center: HPoint, r_max: f64, r_panels: usize, order: usize, angles: usize) -> Result<Self> {
        if !(r_max > 0.0) || angles == 0 {
            return Err(Error::Config(format!("polar rule needs r_max > 0 and angles > 0, got {r_max}, {angles}")));
        }
        let gr = crate::specfun::composite_legendre(order, r_panels, 0.0, r_max)?;
        let to_center = GroupElement::affine(center);
        let dtheta = 2.0 * PI / angles as f64;
        let mut nodes = Vec::with_capacity(gr.len() * angles);
        let mut weights = Vec::with_capacity(gr.len() * angles);
        for k in 0..angles {
            // The rotation matrix with angle phi turns the disc by 2 phi.
            let rot = to_center.mul(&GroupElement::rotation(0.5 * (k as f64 + 0.5) * dtheta));
            for (r, wr) in gr.pairs() {
                nodes.push(rot.apply(HPoint { x: 0.0, s: r.exp() }));
                weights.push(wr * r.sinh() * dtheta);
            }
        }
        Ok(Self {
            nodes,
            weights,
            description: format!(
                "polar about ({}, {}), r <= {r_max}, {r_panels}x{order} Gauss-Legendre, {angles} angles",
                center.x, center.s
            ),
        })
    }

    /// Image of the rule under `g`; weights are unchanged since `mu` is invariant.
    pub fn transported(&self, g: &GroupElement) -> Self {
        Self {
            nodes: self.nodes.iter().map(|z| g.apply(*z)).collect(),
            weights: self.weights.clone(),
            description: format!("{} transported", self.description),
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Value of a `mu`-integral, with a standard error when estimated by Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuIntegral {
    pub value: Complex64,
    pub stderr: Option<f64>,
    pub samples: usize,
}

/// Integration method for [`mu_integral`].
pub enum MuMethod<'a> {
    Rule(&'a HyperbolicRule),
    MonteCarlo {
        domain: &'a DomainSpec,
        samples: usize,
        seed: u64,
    },
}

/// `int f dmu` by a deterministic rule or by seeded Monte Carlo over a domain.
pub fn mu_integral<F>(f: F, method: MuMethod<'_>) -> MuIntegral
where
    F: Fn(HPoint) -> Complex64 + Sync,
{
    match method {
        MuMethod::Rule(rule) => MuIntegral {
            value: rule
                .nodes
                .par_iter()
                .zip(rule.weights.par_iter())
                .map(|(z, w)| *w * f(*z))
                .collect::<Vec<_>>()
                .into_iter()
                .sum(),
            stderr: None,
            samples: rule.len(),
        },
        MuMethod::MonteCarlo { domain, samples, seed } => monte_carlo(domain, samples, seed, f),
    }
}

fn monte_carlo<F>(dom: &DomainSpec, samples: usize, seed: u64, f: F) -> MuIntegral
where
    F: Fn(HPoint) -> Complex64 + Sync,
{
    if samples == 0 {
        return MuIntegral {
            value: Complex64::new(0.0, 0.0),
            stderr: Some(0.0),
            samples: 0,
        };
    }
    let bb = dom.bounding_box();
    let mass = bb.mass();
    let per = samples as u64 / MC_SHARDS;
    let extra = samples as u64 % MC_SHARDS;
    let partials: Vec<(Complex64, f64, u64)> = (0..MC_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let count = per + u64::from(shard < extra);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sumsq = 0.0;
            for _ in 0..count {
                let z = bb.sample(&mut rng);
                if dom.contains(z) {
                    let v = f(z);
                    sum += v;
                    sumsq += v.norm_sqr();
                }
            }
            (sum, sumsq, count)
        })
        .collect();
    let (sum, sumsq, n) = partials.into_iter().fold((Complex64::new(0.0, 0.0), 0.0, 0u64), |acc, p| {
        (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2)
    });
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sumsq / nf - mean.norm_sqr()).max(0.0);
    let stderr = mass * (var / nf).sqrt();
    MuIntegral {
        value: mass * mean,
        stderr: Some(stderr),
        samples,
    }
}
