//! Fuchsian groups given by generators: the modular group, Hecke triangle
//! groups and user-supplied sets. Orbits are found by breadth-first word
//! enumeration with distance pruning.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{ball_area, hecke_lambda, hyp_distance, GroupElement, HPoint};

/// Extra pruning margin added on top of the triangle-inequality bound.
pub const DEFAULT_PRUNE_SLACK: f64 = 1.0;

/// Entrywise tolerance used for non-integer generator sets.
pub const DEFAULT_DEDUP_TOLERANCE: f64 = 1e-9;

/// Serializable group description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum GroupConfig {
    Psl2z,
    Hecke {
        q: u32,
    },
    Custom {
        /// Matrices `[a, b, c, d]` with unit determinant.
        generators: Vec<[f64; 4]>,
        #[serde(default = "default_tol")]
        dedup_tolerance: f64,
    },
}

fn default_tol() -> f64 {
    DEFAULT_DEDUP_TOLERANCE
}

/// How group elements are identified during enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DedupMode {
    /// Entries rounded to integers; exact for integer groups.
    Integer,
    /// Entries quantized at the given tolerance.
    Tolerance(f64),
}

#[derive(Debug, Clone, PartialEq)]
struct Letter {
    name: String,
    g: GroupElement,
}

/// Generators plus the alphabet of generators and their inverses.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPresentation {
    config: GroupConfig,
    generators: Vec<GroupElement>,
    letters: Vec<Letter>,
    dedup: DedupMode,
}

fn is_integer_matrix(g: &GroupElement) -> bool {
    g.entries().iter().all(|v| v.fract() == 0.0)
}

impl GroupPresentation {
    pub fn psl2z() -> Self {
        Self::from_config(&GroupConfig::Psl2z).expect("builtin group")
    }

    pub fn hecke(q: u32) -> Result<Self> {
        Self::from_config(&GroupConfig::Hecke { q })
    }

    pub fn custom(generators: Vec<GroupElement>, dedup_tolerance: f64) -> Result<Self> {
        Self::from_config(&GroupConfig::Custom {
            generators: generators.iter().map(|g| g.entries()).collect(),
            dedup_tolerance,
        })
    }

    pub fn from_config(config: &GroupConfig) -> Result<Self> {
        let (generators, names, tol) = match config {
            GroupConfig::Psl2z => (
                vec![GroupElement::inversion(), GroupElement::translation(1.0)],
                vec!["S".to_string(), "T".to_string()],
                DEFAULT_DEDUP_TOLERANCE,
            ),
            GroupConfig::Hecke { q } => {
                if *q < 3 {
                    return Err(Error::Config(format!("Hecke group needs q >= 3, got {q}")));
                }
                (
                    vec![GroupElement::inversion(), GroupElement::translation(hecke_lambda(*q))],
                    vec!["S".to_string(), "T".to_string()],
                    DEFAULT_DEDUP_TOLERANCE,
                )
            }
            GroupConfig::Custom {
                generators,
                dedup_tolerance,
            } => {
                if generators.is_empty() {
                    return Err(Error::Config("custom group needs at least one generator".into()));
                }
                if !(*dedup_tolerance > 0.0) {
                    return Err(Error::Config(format!("dedup tolerance {dedup_tolerance} must be positive")));
                }
                let gens = generators
                    .iter()
                    .map(|m| GroupElement::new(m[0], m[1], m[2], m[3]))
                    .collect::<Result<Vec<_>>>()?;
                let names = (0..gens.len()).map(|i| format!("g{i}")).collect();
                (gens, names, *dedup_tolerance)
            }
        };
        let mut letters: Vec<Letter> = Vec::new();
        for (g, name) in generators.iter().zip(&names) {
            letters.push(Letter {
                name: name.clone(),
                g: g.canonical(),
            });
        }
        for (g, name) in generators.iter().zip(&names) {
            let inv = g.inverse();
            if letters.iter().all(|l| l.g.max_entry_diff(&inv) > tol) {
                letters.push(Letter {
                    name: format!("{name}^-1"),
                    g: inv,
                });
            }
        }
        let dedup = if generators.iter().all(is_integer_matrix) {
            DedupMode::Integer
        } else {
            DedupMode::Tolerance(tol)
        };
        Ok(Self {
            config: config.clone(),
            generators,
            letters,
            dedup,
        })
    }

    /// Replaces the deduplication rule (used to cross-check integer and float keys).
    pub fn with_dedup(mut self, dedup: DedupMode) -> Self {
        self.dedup = dedup;
        self
    }

    pub fn config(&self) -> &GroupConfig {
        &self.config
    }

    pub fn name(&self) -> String {
        match &self.config {
            GroupConfig::Psl2z => "psl2z".into(),
            GroupConfig::Hecke { q } => format!("hecke-{q}"),
            GroupConfig::Custom { .. } => "custom".into(),
        }
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn dedup(&self) -> DedupMode {
        self.dedup
    }

    /// Letter names in alphabet order (generators, then inverses).
    pub fn alphabet(&self) -> Vec<&str> {
        self.letters.iter().map(|l| l.name.as_str()).collect()
    }
}

/// One orbit point.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitEntry {
    /// Letter indices into the group alphabet; empty for the identity.
    pub letters: Vec<u16>,
    pub word: String,
    pub element: GroupElement,
    pub image: HPoint,
    /// Distance from the enumeration center.
    pub distance: f64,
    /// Index of an earlier entry with the same image, when the base point has
    /// a nontrivial stabilizer.
    pub coincident_with: Option<usize>,
}

/// Orbit points `gamma(base)` within `radius` of `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSet {
    pub group: String,
    pub base: HPoint,
    pub center: HPoint,
    pub radius: f64,
    pub entries: Vec<OrbitEntry>,
    /// Set when the word budget ran out before the frontier left the ball.
    pub truncated: bool,
    /// Distinct group elements generated.
    pub visited: usize,
}

impl OrbitSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn images(&self) -> Vec<HPoint> {
        self.entries.iter().map(|e| e.image).collect()
    }

    /// Images with stabilizer duplicates removed.
    pub fn distinct_images(&self) -> Vec<HPoint> {
        self.entries
            .iter()
            .filter(|e| e.coincident_with.is_none())
            .map(|e| e.image)
            .collect()
    }

    /// Sub-orbit within a smaller radius; entries keep their order.
    pub fn restrict(&self, radius: f64) -> OrbitSet {
        let entries: Vec<OrbitEntry> = self.entries.iter().filter(|e| e.distance < radius).cloned().collect();
        OrbitSet {
            group: self.group.clone(),
            base: self.base,
            center: self.center,
            radius: radius.min(self.radius),
            entries,
            truncated: self.truncated,
            visited: self.visited,
        }
    }

    /// CSV with columns `word,a,b,c,d,image_x,image_s,distance,coincident_with`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("word,a,b,c,d,image_x,image_s,distance,coincident_with\n");
        for e in &self.entries {
            let [a, b, c, d] = e.element.entries();
            let co = e.coincident_with.map(|i| i.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{a:.17e},{b:.17e},{c:.17e},{d:.17e},{:.17e},{:.17e},{:.17e},{co}",
                if e.word.is_empty() { "e" } else { &e.word },
                e.image.x,
                e.image.s,
                e.distance
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key([i64; 4]);

fn keys_for(g: &GroupElement, mode: DedupMode) -> Vec<Key> {
    let e = g.entries();
    match mode {
        DedupMode::Integer => vec![Key(e.map(|v| v.round() as i64))],
        DedupMode::Tolerance(tol) => {
            // Probe the neighbouring bin for entries close to a bin edge.
            let mut keys = vec![[0i64; 4]];
            for (i, v) in e.iter().enumerate() {
                let q = v / tol;
                let r = q.round();
                let frac = q - r;
                let alt = if frac.abs() > 0.4 { Some(r + frac.signum()) } else { None };
                let mut next = Vec::with_capacity(keys.len() * 2);
                for k in &keys {
                    let mut k1 = *k;
                    k1[i] = r as i64;
                    next.push(k1);
                    if let Some(a) = alt {
                        let mut k2 = *k;
                        k2[i] = a as i64;
                        next.push(k2);
                    }
                }
                keys = next;
            }
            keys.into_iter().map(Key).collect()
        }
    }
}

/// Orbit of `z` within distance `r` of `z`.
pub fn enumerate_ball(group: &GroupPresentation, z: HPoint, r: f64, max_words: usize) -> Result<OrbitSet> {
    enumerate_around(group, z, z, r, max_words, DEFAULT_PRUNE_SLACK)
}

/// Orbit of `base` within distance `r` of `center`.
///
/// Breadth-first over words in the alphabet order, so each element carries
/// its shortlex-least word. A word is extended only while its image lies
/// within `r + max_g d(base, g base) + slack` of `center`.
pub fn enumerate_around(
    group: &GroupPresentation,
    base: HPoint,
    center: HPoint,
    r: f64,
    max_words: usize,
    slack: f64,
) -> Result<OrbitSet> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(crate::error::domain("enumerate_ball", format!("radius {r} must be positive")));
    }
    let margin = group
        .letters
        .iter()
        .map(|l| hyp_distance(base, l.g.apply(base)))
        .fold(0.0, f64::max);
    let cutoff = r + margin + slack.max(0.0);

    let mut seen: HashMap<Key, ()> = HashMap::new();
    let mut queue: VecDeque<(GroupElement, Vec<u16>)> = VecDeque::new();
    let mut found: Vec<(GroupElement, Vec<u16>, HPoint, f64)> = Vec::new();
    let id = GroupElement::IDENTITY;
    for k in keys_for(&id, group.dedup).into_iter().take(1) {
        seen.insert(k, ());
    }
    queue.push_back((id, Vec::new()));
    let mut visited = 1usize;
    let mut truncated = false;

    while let Some((g, word)) = queue.pop_front() {
        let image = g.apply(base);
        let d = hyp_distance(center, image);
        if d < r {
            found.push((g, word.clone(), image, d));
        }
        if d >= cutoff {
            continue;
        }
        for (li, letter) in group.letters.iter().enumerate() {
            let h = g.mul(&letter.g);
            let keys = keys_for(&h, group.dedup);
            if keys.iter().any(|k| seen.contains_key(k)) {
                continue;
            }
            if visited >= max_words {
                truncated = true;
                continue;
            }
            seen.insert(keys[0], ());
            visited += 1;
            let mut w = word.clone();
            w.push(li as u16);
            queue.push_back((h, w));
        }
    }

    found.sort_by(|a, b| a.3.total_cmp(&b.3).then_with(|| a.1.len().cmp(&b.1.len())).then_with(|| a.1.cmp(&b.1)));

    let tol = match group.dedup {
        DedupMode::Integer => DEFAULT_DEDUP_TOLERANCE,
        DedupMode::Tolerance(t) => t,
    };
    let mut entries: Vec<OrbitEntry> = Vec::with_capacity(found.len());
    for (g, letters, image, distance) in found {
        let coincident_with = entries.iter().rev().take_while(|e| distance - e.distance <= tol).find_map(|e| {
            let same = (e.image.x - image.x).abs() <= tol * image.s.max(1.0) && (e.image.s - image.s).abs() <= tol * image.s.max(1.0);
            same.then(|| e.coincident_with.unwrap_or(0))
        });
        let coincident_with = coincident_with.map(|_| {
            // Point at the first entry with this image.
            entries
                .iter()
                .position(|e| (e.image.x - image.x).abs() <= tol * image.s.max(1.0) && (e.image.s - image.s).abs() <= tol * image.s.max(1.0))
                .unwrap_or(0)
        });
        let word = letters.iter().map(|&i| group.letters[i as usize].name.as_str()).collect::<Vec<_>>().join(".");
        entries.push(OrbitEntry {
            letters,
            word,
            element: g,
            image,
            distance,
            coincident_with,
        });
    }

    Ok(OrbitSet {
        group: group.name(),
        base,
        center,
        radius: r,
        entries,
        truncated,
        visited,
    })
}

/// `n_r(z, w) / |B_r|`, where `n_r(z, w)` counts `gamma` with `d(z, gamma w) < r`.
///
/// Stabilizer elements are counted separately, as group elements.
pub fn counting_ratio(group: &GroupPresentation, z: HPoint, w: HPoint, r: f64, max_words: usize) -> Result<f64> {
    let orbit = enumerate_around(group, w, z, r, max_words, DEFAULT_PRUNE_SLACK)?;
    if orbit.truncated {
        return Err(Error::Truncated {
            visited: orbit.visited,
            partial_count: orbit.len(),
        });
    }
    Ok(orbit.len() as f64 / ball_area(r)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, s: f64) -> HPoint {
        HPoint::new(x, s).unwrap()
    }

    #[test]
    fn small_ball_is_identity() {
        let g = GroupPresentation::psl2z();
        let o = enumerate_ball(&g, pt(0.0, 2.0), 0.1, 10_000).unwrap();
        assert_eq!(o.len(), 1);
        assert_eq!(o.entries[0].element, GroupElement::IDENTITY);
        assert_eq!(o.entries[0].word, "");
        assert!(!o.truncated);
    }

    #[test]
    fn fixed_point_of_s_is_flagged() {
        let g = GroupPresentation::psl2z();
        let o = enumerate_ball(&g, HPoint::I, 0.8, 10_000).unwrap();
        let s = GroupElement::inversion().canonical();
        let idx = o.entries.iter().position(|e| e.element == s).expect("S in ball");
        assert_eq!(o.entries[idx].coincident_with, Some(0));
        assert_eq!(o.entries[idx].word, "S");
        assert!(o.entries[idx].distance < 1e-12);
    }

    #[test]
    fn hecke_three_is_modular() {
        let a = enumerate_ball(&GroupPresentation::psl2z(), pt(0.1, 1.7), 4.0, 100_000).unwrap();
        let b = enumerate_ball(&GroupPresentation::hecke(3).unwrap(), pt(0.1, 1.7), 4.0, 100_000).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.entries.iter().zip(&b.entries) {
            assert_eq!(x.element, y.element);
            assert_eq!(x.word, y.word);
        }
    }

    #[test]
    fn truncation_is_reported() {
        let g = GroupPresentation::psl2z();
        let o = enumerate_ball(&g, pt(0.0, 2.0), 5.0, 50).unwrap();
        assert!(o.truncated);
        match counting_ratio(&g, pt(0.0, 2.0), pt(0.0, 2.0), 5.0, 50) {
            Err(Error::Truncated { partial_count, .. }) => assert!(partial_count > 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn counts_at_two_i() {
        // Frozen from an independent integer brute force over SL(2, Z).
        let g = GroupPresentation::psl2z();
        let z = pt(0.0, 2.0);
        for (r, n) in [(3.0, 58), (4.0, 166), (5.0, 450), (6.0, 1214)] {
            let o = enumerate_ball(&g, z, r, 1_000_000).unwrap();
            assert_eq!(o.len(), n, "r = {r}");
        }
    }

    #[test]
    fn small_radius_ratio_is_zero() {
        let g = GroupPresentation::psl2z();
        let v = counting_ratio(&g, pt(0.3, 1.9), pt(0.1, 1.2), 0.05, 1000).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn custom_group_and_csv() {
        let lam = hecke_lambda(5);
        let g = GroupPresentation::custom(vec![GroupElement::inversion(), GroupElement::translation(lam)], 1e-9).unwrap();
        assert_eq!(g.alphabet(), vec!["g0", "g1", "g1^-1"]);
        let o = enumerate_ball(&g, pt(0.0, 1.5), 2.0, 10_000).unwrap();
        let csv = o.to_csv();
        assert!(csv.starts_with("word,a,b,c,d,image_x,image_s,distance"));
        assert_eq!(csv.lines().count(), o.len() + 1);
        assert!(GroupPresentation::custom(vec![], 1e-9).is_err());
        assert!(GroupPresentation::hecke(2).is_err());
    }

    #[test]
    fn config_json() {
        let c: GroupConfig = serde_json::from_str(r#"{"name":"hecke","q":5}"#).unwrap();
        assert_eq!(c, GroupConfig::Hecke { q: 5 });
        let c: GroupConfig = serde_json::from_str(r#"{"name":"custom","generators":[[1,1,0,1]]}"#).unwrap();
        let g = GroupPresentation::from_config(&c).unwrap();
        assert_eq!(g.dedup(), DedupMode::Integer);
        assert_eq!(serde_json::to_string(&GroupConfig::Psl2z).unwrap(), r#"{"name":"psl2z"}"#);
    }
}
