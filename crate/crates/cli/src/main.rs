use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use nyquist_cli::output::Status;
use nyquist_cli::{execute, ExperimentConfig, Overrides, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
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

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Selftest => Subcommand::Selftest,
            Command::KernelCheck => Subcommand::KernelCheck,
            Command::TraceCheck => Subcommand::TraceCheck,
            Command::GramSpectrum => Subcommand::GramSpectrum,
            Command::RieszScan => Subcommand::RieszScan,
            Command::NyquistReport => Subcommand::NyquistReport,
            Command::EigenProfile => Subcommand::EigenProfile,
            Command::MaassCheck => Subcommand::MaassCheck,
            Command::RotationCheck => Subcommand::RotationCheck,
            Command::Patterson => Subcommand::Patterson,
        }
    }
}

/// Wavelet, kernel and orbit-density experiments on the upper half-plane.
///
/// Exit status: 0 all checks passed, 1 a check failed or the run aborted,
/// 2 configuration error.
#[derive(Debug, Parser)]
#[command(name = "nyquist", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Laguerre index of the analyzing wavelet.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Field strength; switches to the stacked kernel.
    #[arg(long = "B", alias = "b")]
    b: Option<f64>,
    /// Number of stacked levels (N).
    #[arg(long = "N", alias = "levels")]
    levels: Option<usize>,
    /// psl2z or hecke.
    #[arg(long)]
    group: Option<String>,
    #[arg(long)]
    q: Option<u32>,
    /// modular-standard, hecke, rectangle or group (fundamental domain of --group).
    #[arg(long)]
    domain: Option<String>,
    /// Rectangle bounds x0,x1,s0,s1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rect: Option<Vec<f64>>,
    /// Orbit base point x,s.
    #[arg(long = "z", value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    /// Ball radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Cusp truncation height.
    #[arg(long)]
    truncate: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    max_words: Option<usize>,
    /// One Gram column per distinct orbit image.
    #[arg(long)]
    merge_duplicates: bool,
    /// Output directory (default: $NYQUIST_OUT_DIR, then ./nyquist-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write gnuplot scripts next to the CSV tables.
    #[arg(long)]
    plot: bool,
    /// Print the resolved config as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => match ExperimentConfig::from_file(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    let overrides = Overrides {
        seed: cli.seed,
        n: cli.n,
        alpha: cli.alpha,
        b: cli.b,
        levels: cli.levels,
        group: cli.group.clone(),
        q: cli.q,
        domain: cli.domain.clone(),
        rect: cli.rect.clone(),
        point: cli.point.clone(),
        radii: cli.radii.clone(),
        resolution: cli.resolution,
        truncate: cli.truncate,
        samples: cli.samples,
        mc_samples: cli.mc_samples,
        max_words: cli.max_words,
        merge_duplicates: cli.merge_duplicates,
        out: cli.out.clone(),
        plot: cli.plot,
    };
    if let Err(e) = cfg.apply(&overrides) {
        eprintln!("{e}");
        return ExitCode::from(2);
    }
    if cli.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
        return ExitCode::SUCCESS;
    }
    let cmd = Subcommand::from(cli.command);
    match execute(cmd, &cfg) {
        Ok(summary) => {
            for c in &summary.checks {
                println!(
                    "{} {:<40} {:.6e} {} {:.3e}",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    c.value,
                    c.relation,
                    c.bound
                );
            }
            let verdict = match summary.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Error => "error",
            };
            println!("{}: {verdict}; record {}", cmd.name(), summary.record.display());
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
