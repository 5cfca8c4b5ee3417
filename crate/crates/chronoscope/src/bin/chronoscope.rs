//! Scenario runner binary. One scenario per invocation:
//!
//! ```text
//! chronoscope <scenario> --config <path> [--out <dir>] [--seed <int>] [--check]
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical precondition
//! error, 4 check failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chronoscope::config::{Scenario, ScenarioConfig};
use chronoscope::scenario::run;

#[derive(Parser)]
#[command(
    name = "chronoscope",
    about = "Spectral-temporal characterization pipelines for single photons",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the scenario configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory override
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for randomized stages
    #[arg(long)]
    seed: Option<u64>,
    /// Run the applicable two-path / self-consistency property and fail on
    /// violation
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Phase-space distribution of the configured state
    Wigner(RunArgs),
    /// Windowed phase-space distribution
    PseudoWigner(RunArgs),
    /// Short-frequency-transform spectrogram
    Spectrogram(RunArgs),
    /// Coincidence probability map of the two-photon pipeline
    HomMap(RunArgs),
    /// Phase retrieval from a synthetic spectrogram
    Retrieve(RunArgs),
    /// State reconstruction from the phase-space distribution
    Reconstruct(RunArgs),
    /// Comb-state resolution study at N = 256 or 1024
    Figure3(RunArgs),
}

impl Command {
    fn scenario(&self) -> Scenario {
        match self {
            Command::Wigner(_) => Scenario::Wigner,
            Command::PseudoWigner(_) => Scenario::PseudoWigner,
            Command::Spectrogram(_) => Scenario::Spectrogram,
            Command::HomMap(_) => Scenario::HomMap,
            Command::Retrieve(_) => Scenario::Retrieve,
            Command::Reconstruct(_) => Scenario::Reconstruct,
            Command::Figure3(_) => Scenario::Figure3,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Wigner(a)
            | Command::PseudoWigner(a)
            | Command::Spectrogram(a)
            | Command::HomMap(a)
            | Command::Retrieve(a)
            | Command::Reconstruct(a)
            | Command::Figure3(a) => a,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let scenario = cli.command.scenario();
    let args = cli.command.args();

    let mut cfg = match ScenarioConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("chronoscope: {e}");
            return ExitCode::from(2);
        }
    };
    if cfg.scenario != scenario {
        eprintln!(
            "chronoscope: config names scenario {}, but the {scenario} subcommand was invoked",
            cfg.scenario,
            scenario = scenario
        );
        return ExitCode::from(2);
    }
    if let Some(out) = &args.out {
        cfg.out_dir = Some(out.to_string_lossy().into_owned());
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }

    match run(&cfg, args.check) {
        Ok(summary) => {
            println!(
                "{}: {} artifacts in {}",
                scenario,
                summary.manifest.files.len(),
                summary.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("chronoscope {scenario}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
