//! Batch runner for the `nyquist` command-line tool.
//!
//! Every subcommand resolves an [`ExperimentConfig`], writes CSV tables and a
//! JSON record into the output directory, and maps its outcome to an exit
//! code: 0 when every check passes, 1 when a check fails or the computation
//! aborts, 2 for configuration errors.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use nyquist_core::hyperbolic::RNG_ALGORITHM;
use serde_json::Value;
use thiserror::Error;

pub use config::{ExperimentConfig, Overrides};
use output::{Artifacts, Check, Record, Status};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] nyquist_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                nyquist_core::Error::Config(_)
                | nyquist_core::Error::DivergentAdmissibility { .. }
                | nyquist_core::Error::UnsupportedMethod { .. } => 2,
                _ => 1,
            },
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Selftest,
    KernelCheck,
    TraceCheck,
    GramSpectrum,
    RieszScan,
    NyquistReport,
    EigenProfile,
    MaassCheck,
    RotationCheck,
    Patterson,
}

impl Subcommand {
    pub const ALL: [Subcommand; 10] = [
        Subcommand::Selftest,
        Subcommand::KernelCheck,
        Subcommand::TraceCheck,
        Subcommand::GramSpectrum,
        Subcommand::RieszScan,
        Subcommand::NyquistReport,
        Subcommand::EigenProfile,
        Subcommand::MaassCheck,
        Subcommand::RotationCheck,
        Subcommand::Patterson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Selftest => "selftest",
            Subcommand::KernelCheck => "kernel-check",
            Subcommand::TraceCheck => "trace-check",
            Subcommand::GramSpectrum => "gram-spectrum",
            Subcommand::RieszScan => "riesz-scan",
            Subcommand::NyquistReport => "nyquist-report",
            Subcommand::EigenProfile => "eigen-profile",
            Subcommand::MaassCheck => "maass-check",
            Subcommand::RotationCheck => "rotation-check",
            Subcommand::Patterson => "patterson",
        }
    }

    /// Identifiers of the formulas a subcommand exercises; see `docs/formats.md`.
    pub fn anchors(self) -> &'static [&'static str] {
        match self {
            Subcommand::Selftest => &[
                "laguerre-orthogonality",
                "jacobi-endpoint-sign",
                "moebius-imaginary-part",
                "norm-admissibility-ratio",
                "kernel-diagonal",
                "kernel-covariance",
                "super-kernel-diagonal",
                "gram-positivity",
                "nyquist-thresholds",
            ],
            Subcommand::KernelCheck => &[
                "kernel-closed-form",
                "kernel-diagonal",
                "kernel-covariance",
                "kernel-transform-relation",
            ],
            Subcommand::TraceCheck => &["localization-trace", "localization-second-moment"],
            Subcommand::GramSpectrum => &["kernel-transform-relation", "gram-riesz-bounds"],
            Subcommand::RieszScan => &["gram-riesz-bounds", "riesz-necessary-density", "cauchy-interlacing"],
            Subcommand::NyquistReport => &[
                "frame-necessary-density",
                "riesz-necessary-density",
                "super-wavelet-density",
                "level-density",
            ],
            Subcommand::EigenProfile => &[
                "localization-trace",
                "localization-second-moment",
                "localization-operator-bound",
            ],
            Subcommand::MaassCheck => &["maass-level-eigenvalue"],
            Subcommand::RotationCheck => &["rotation-covariance"],
            Subcommand::Patterson => &["orbit-counting-asymptotic"],
        }
    }

    fn body(self) -> fn(&ExperimentConfig, &mut Artifacts) -> Result<commands::Outcome, CliError> {
        match self {
            Subcommand::Selftest => commands::selftest,
            Subcommand::KernelCheck => commands::kernel_check,
            Subcommand::TraceCheck => commands::trace_check,
            Subcommand::GramSpectrum => commands::gram_spectrum,
            Subcommand::RieszScan => commands::riesz_scan,
            Subcommand::NyquistReport => commands::nyquist,
            Subcommand::EigenProfile => commands::eigen_profile_cmd,
            Subcommand::MaassCheck => commands::maass,
            Subcommand::RotationCheck => commands::rotation,
            Subcommand::Patterson => commands::patterson,
        }
    }
}

/// What a completed run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub status: Status,
    pub checks: Vec<Check>,
    pub results: Value,
    pub record: PathBuf,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            _ => 1,
        }
    }
}

/// Validates `cfg`, runs the subcommand and writes its record.
///
/// If the computation aborts, a record with status `error` is still written
/// (tables written before the failure are kept) and the error is returned.
pub fn execute(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let mut art = Artifacts::new(&cfg.out_dir(), cfg.output.plot, cmd.anchors())?;
    let outcome = cmd.body()(cfg, &mut art);
    let (status, checks, results, failure) = match &outcome {
        Ok(o) => {
            let status = if o.checks.iter().all(|c| c.passed) { Status::Pass } else { Status::Fail };
            (status, o.checks.clone(), o.results.clone(), None)
        }
        Err(e) => (Status::Error, Vec::new(), Value::Null, Some(e.to_string())),
    };
    let record = Record {
        tool: "nyquist",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cmd.name(),
        status,
        rng: RNG_ALGORITHM,
        formula_anchors: cmd.anchors(),
        config: cfg,
        checks: &checks,
        results: &results,
        tables: art.tables().to_vec(),
        failure,
    };
    let path = art.record(cmd.name(), &record)?;
    outcome?;
    Ok(RunSummary {
        status,
        checks,
        results,
        record: path,
    })
}
