//! Experiment configuration: JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use nyquist_core::fuchsian::{GroupConfig, GroupPresentation};
use nyquist_core::hyperbolic::{DomainConfig, DomainKind, DomainSpec, HPoint};
use nyquist_core::kernel::SuperParams;
use nyquist_core::spectra::KernelParams;
use nyquist_core::wavelet::WaveletParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NYQUIST_OUT_DIR";

/// Output directory used when neither the config, a flag nor the environment names one.
pub const DEFAULT_OUT_DIR: &str = "nyquist-out";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletSection {
    pub n: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaassCase {
    #[serde(rename = "B")]
    pub b: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaassSection {
    pub cases: Vec<MaassCase>,
    /// Kernel base point `z0` as `[x, s]`.
    pub center: [f64; 2],
    /// Random probe points per case.
    pub probes: usize,
    /// Finite-difference step.
    pub step: f64,
}

impl Default for MaassSection {
    fn default() -> Self {
        Self {
            cases: vec![
                MaassCase { b: 1.6, n: 0 },
                MaassCase { b: 2.6, n: 0 },
                MaassCase { b: 2.6, n: 1 },
                MaassCase { b: 3.2, n: 2 },
            ],
            center: [0.1, 1.2],
            probes: 5,
            step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationSection {
    /// Random `(theta, z)` cases for the Laguerre wavelet.
    pub samples: usize,
    pub control_theta: f64,
    pub control_point: [f64; 2],
    /// Phase exponent used with the control wavelet.
    pub control_weight: f64,
    /// The control residual must stay above this value.
    pub control_floor: f64,
}

impl Default for RotationSection {
    fn default() -> Self {
        Self {
            samples: 20,
            control_theta: std::f64::consts::PI / 5.0,
            control_point: [0.4, 1.3],
            control_weight: 2.0,
            control_floor: 3.9e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub diagonal: f64,
    pub covariance: f64,
    pub consistency: f64,
    /// Relative trace error on bounded domains.
    pub trace: f64,
    /// Relative trace error on cusp-truncated domains.
    pub trace_truncated: f64,
    /// Monte Carlo agreement in standard errors.
    pub mc_sigmas: f64,
    /// Slack around `[0, 1]` for Nyström eigenvalues.
    pub confinement: f64,
    pub maass: f64,
    pub rotation: f64,
    /// Relative PSD slack for Gram matrices.
    pub gram_psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            diagonal: 1e-12,
            covariance: 1e-10,
            consistency: 1e-8,
            trace: 5e-3,
            trace_truncated: 1e-2,
            mc_sigmas: 3.0,
            confinement: 1e-6,
            maass: 1e-5,
            rotation: 1e-8,
            gram_psd: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Falls back to `$NYQUIST_OUT_DIR`, then `./nyquist-out`.
    pub dir: Option<PathBuf>,
    /// Write a gnuplot script next to every CSV.
    pub plot: bool,
}

/// Every knob of every subcommand. Unused sections are ignored by a given subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub wavelet: WaveletSection,
    /// When set, Gram, Nyström and Nyquist computations use the stacked kernel.
    pub super_wavelet: Option<SuperParams>,
    pub group: GroupConfig,
    /// Defaults to the standard fundamental domain of `group`.
    pub domain: Option<DomainConfig>,
    /// Orbit base point `[x, s]`.
    pub point: [f64; 2],
    /// Ball radii for Gram and Riesz scans, strictly increasing.
    pub radii: Vec<f64>,
    /// Radii for the counting-ratio diagnostic.
    pub patterson_radii: Vec<f64>,
    /// Nyström nodes per axis.
    pub resolution: usize,
    /// Cusp truncation height.
    pub truncate: f64,
    /// Random cases for diagonal and covariance checks.
    pub samples: usize,
    /// Random pairs for the kernel/transform consistency check.
    pub consistency_samples: usize,
    pub mc_samples: usize,
    pub max_words: usize,
    /// Keep one Gram column per distinct orbit image.
    pub merge_duplicates: bool,
    pub maass: MaassSection,
    pub rotation: RotationSection,
    pub tolerances: Tolerances,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            wavelet: WaveletSection { n: 0, alpha: 2.0 },
            super_wavelet: None,
            group: GroupConfig::Psl2z,
            domain: None,
            point: [0.0, 2.0],
            radii: vec![2.0, 3.0, 4.0, 5.0],
            patterson_radii: vec![4.0, 5.0, 6.0],
            resolution: 32,
            truncate: 10.0,
            samples: 100,
            consistency_samples: 30,
            mc_samples: 100_000,
            max_words: 5_000_000,
            merge_duplicates: false,
            maass: MaassSection::default(),
            rotation: RotationSection::default(),
            tolerances: Tolerances::default(),
            output: OutputSection::default(),
        }
    }
}

/// Flag values that override the config file. `None` leaves the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    pub b: Option<f64>,
    pub levels: Option<usize>,
    pub group: Option<String>,
    pub q: Option<u32>,
    pub domain: Option<String>,
    pub rect: Option<Vec<f64>>,
    pub point: Option<Vec<f64>>,
    pub radii: Option<Vec<f64>>,
    pub resolution: Option<usize>,
    pub truncate: Option<f64>,
    pub samples: Option<usize>,
    pub mc_samples: Option<usize>,
    pub max_words: Option<usize>,
    pub merge_duplicates: bool,
    pub out: Option<PathBuf>,
    pub plot: bool,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies flags on top of the file values; flags win.
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.n {
            self.wavelet.n = v;
        }
        if let Some(v) = o.alpha {
            self.wavelet.alpha = v;
        }
        match (o.b, o.levels) {
            (Some(b), levels) => {
                let levels = levels.or(self.super_wavelet.map(|s| s.levels)).unwrap_or(1);
                self.super_wavelet = Some(SuperParams { b, levels });
            }
            (None, Some(levels)) => match self.super_wavelet.as_mut() {
                Some(sp) => sp.levels = levels,
                None => return Err(CliError::Config("--levels needs --B or a super_wavelet section".into())),
            },
            (None, None) => {}
        }
        if let Some(g) = &o.group {
            self.group = match g.as_str() {
                "psl2z" => GroupConfig::Psl2z,
                "hecke" => GroupConfig::Hecke {
                    q: o.q.ok_or_else(|| CliError::Config("--group hecke needs --q".into()))?,
                },
                other => return Err(CliError::Config(format!("unknown group '{other}' (psl2z, hecke)"))),
            };
        } else if let Some(q) = o.q {
            self.group = GroupConfig::Hecke { q };
        }
        if let Some(d) = &o.domain {
            let kind = match d.as_str() {
                "modular-standard" => DomainKind::ModularStandard,
                "hecke" => DomainKind::Hecke {
                    q: match (&self.group, o.q) {
                        (_, Some(q)) => q,
                        (GroupConfig::Hecke { q }, None) => *q,
                        _ => return Err(CliError::Config("--domain hecke needs --q".into())),
                    },
                },
                "rectangle" => {
                    let r = o
                        .rect
                        .as_ref()
                        .ok_or_else(|| CliError::Config("--domain rectangle needs --rect x0,x1,s0,s1".into()))?;
                    if r.len() != 4 {
                        return Err(CliError::Config("--rect takes four numbers x0,x1,s0,s1".into()));
                    }
                    DomainKind::Rectangle {
                        x: [r[0], r[1]],
                        s: [r[2], r[3]],
                    }
                }
                "group" => {
                    self.domain = None;
                    return self.apply_rest(o);
                }
                other => {
                    return Err(CliError::Config(format!(
                        "unknown domain '{other}' (modular-standard, hecke, rectangle, group)"
                    )))
                }
            };
            self.domain = Some(DomainConfig { kind, area: None });
        } else if o.rect.is_some() {
            return Err(CliError::Config("--rect needs --domain rectangle".into()));
        }
        self.apply_rest(o)
    }

    fn apply_rest(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(p) = &o.point {
            if p.len() != 2 {
                return Err(CliError::Config("--z takes two numbers x,s".into()));
            }
            self.point = [p[0], p[1]];
        }
        if let Some(r) = &o.radii {
            self.radii = r.clone();
        }
        if let Some(v) = o.resolution {
            self.resolution = v;
        }
        if let Some(v) = o.truncate {
            self.truncate = v;
        }
        if let Some(v) = o.samples {
            self.samples = v;
        }
        if let Some(v) = o.mc_samples {
            self.mc_samples = v;
        }
        if let Some(v) = o.max_words {
            self.max_words = v;
        }
        if o.merge_duplicates {
            self.merge_duplicates = true;
        }
        if let Some(d) = &o.out {
            self.output.dir = Some(d.clone());
        }
        if o.plot {
            self.output.plot = true;
        }
        Ok(())
    }

    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.wavelet_params()?;
        if let Some(sp) = &self.super_wavelet {
            sp.validate().map_err(config_err)?;
        }
        self.group_presentation()?;
        self.domain_spec()?;
        self.base_point()?;
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0)) || self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("radii must be positive and strictly increasing".into()));
        }
        if self.patterson_radii.len() < 2 || self.patterson_radii.iter().any(|r| !(*r > 0.0)) {
            return Err(CliError::Config("patterson_radii needs at least two positive radii".into()));
        }
        if self.resolution < 8 {
            return Err(CliError::Config(format!("resolution {} below the minimum of 8", self.resolution)));
        }
        if !(self.truncate > 1.0) || !self.truncate.is_finite() {
            return Err(CliError::Config(format!("truncation height {} must exceed 1", self.truncate)));
        }
        if self.mc_samples == 0 || self.max_words == 0 {
            return Err(CliError::Config("mc_samples and max_words must be positive".into()));
        }
        if !(self.maass.step > 0.0) {
            return Err(CliError::Config("maass.step must be positive".into()));
        }
        for c in &self.maass.cases {
            SuperParams::new(c.b, c.n + 1).map_err(config_err)?;
        }
        let t = &self.tolerances;
        let all = [
            t.diagonal,
            t.covariance,
            t.consistency,
            t.trace,
            t.trace_truncated,
            t.mc_sigmas,
            t.confinement,
            t.maass,
            t.rotation,
            t.gram_psd,
        ];
        if all.iter().any(|v| !(*v > 0.0)) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn wavelet_params(&self) -> Result<WaveletParams, CliError> {
        WaveletParams::new(self.wavelet.n, self.wavelet.alpha).map_err(config_err)
    }

    pub fn kernel_params(&self) -> Result<KernelParams, CliError> {
        Ok(match self.super_wavelet {
            Some(sp) => KernelParams::Super(sp),
            None => KernelParams::Scalar(self.wavelet_params()?),
        })
    }

    pub fn group_presentation(&self) -> Result<GroupPresentation, CliError> {
        GroupPresentation::from_config(&self.group).map_err(config_err)
    }

    pub fn domain_spec(&self) -> Result<DomainSpec, CliError> {
        let cfg = match (&self.domain, &self.group) {
            (Some(d), _) => d.clone(),
            (None, GroupConfig::Psl2z) => DomainConfig {
                kind: DomainKind::ModularStandard,
                area: None,
            },
            (None, GroupConfig::Hecke { q }) => DomainConfig {
                kind: DomainKind::Hecke { q: *q },
                area: None,
            },
            (None, GroupConfig::Custom { .. }) => {
                return Err(CliError::Config("a custom group needs an explicit domain".into()))
            }
        };
        DomainSpec::from_config(cfg).map_err(config_err)
    }

    pub fn base_point(&self) -> Result<HPoint, CliError> {
        HPoint::new(self.point[0], self.point[1]).map_err(config_err)
    }

    /// Output directory: config or flag, then environment, then the default.
    pub fn out_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

fn config_err(e: nyquist_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::default();
        c.super_wavelet = Some(SuperParams { b: 2.6, levels: 2 });
        c.domain = Some(DomainConfig {
            kind: DomainKind::Rectangle { x: [0.0, 1.0], s: [1.0, 2.0] },
            area: None,
        });
        c.output.dir = Some("out".into());
        let text = serde_json::to_string_pretty(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"seed": 9, "wavelet": {"n": 1, "alpha": 1.5}}"#).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.resolution, 32);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sed": 9}"#).is_err());
    }

    #[test]
    fn flags_win() {
        let mut c = ExperimentConfig::default();
        let o = Overrides {
            alpha: Some(1.5),
            group: Some("hecke".into()),
            q: Some(4),
            ..Default::default()
        };
        c.apply(&o).unwrap();
        assert_eq!(c.wavelet.alpha, 1.5);
        assert_eq!(c.group, GroupConfig::Hecke { q: 4 });
        assert_eq!(c.domain_spec().unwrap().name(), DomainSpec::hecke(4).unwrap().name());
        c.validate().unwrap();
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let mut c = ExperimentConfig::default();
        c.wavelet.alpha = 0.0;
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        let mut c = ExperimentConfig::default();
        c.resolution = 4;
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        let mut c = ExperimentConfig::default();
        assert!(c
            .apply(&Overrides {
                domain: Some("rectangle".into()),
                ..Default::default()
            })
            .is_err());
    }
}
