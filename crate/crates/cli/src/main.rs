//! Command-line harness for Dicke-state RBM experiments.
//!
//! Subcommands cover measurement sampling, tomography training, fidelity
//! evaluation, connected-correlation histograms, compact-model sector
//! sweeps, fidelity paths, receptive-field reports and the hidden-unit
//! scaling study. Every subcommand accepts `--config FILE` holding the
//! same keys as its flags (JSON, snake_case); explicit flags override the
//! file, the file overrides built-in defaults. Each run writes a
//! `<artifact>.meta.json` sidecar with the fully resolved parameters and
//! seed, so replaying a recorded run reproduces its outputs byte for byte.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dicke_rbm_core::Error;

#[derive(Parser)]
#[command(
    name = "dicke-rbm",
    version,
    about = "Dicke states as restricted Boltzmann machines: sampling, training, and analysis"
)]
struct Cli {
    /// Cap the number of worker threads used for internal parallelism
    /// (defaults to one per logical CPU).
    #[arg(long, global = true, value_name = "COUNT")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw computational-basis measurement samples from a Dicke state.
    Sample(commands::SampleArgs),
    /// Fit an RBM to a sample file by contrastive divergence.
    Train(commands::TrainArgs),
    /// Fidelity of stored weights or a compact model against Dicke states.
    Fidelity(commands::FidelityArgs),
    /// Connected-correlation histogram of a Dicke state.
    Ursell(commands::UrsellArgs),
    /// Classify best Dicke sectors over a (w_min, w_max) grid.
    PhaseDiagram(commands::PhaseDiagramArgs),
    /// Sector fidelities along a straight line in (w_min, w_max) space.
    Path(commands::PathArgs),
    /// Receptive-field statistics of a stored weight matrix.
    RfReport(commands::RfReportArgs),
    /// Best training fidelity as a function of hidden-layer width.
    ScalingStudy(commands::ScalingStudyArgs),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) => 2,
        Error::Capacity(_) => 3,
        Error::Io(_) => 4,
        Error::Training(_) => 5,
        Error::Parse(_) => 6,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not configure the thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let result = match cli.command {
        Command::Sample(args) => commands::run_sample(args),
        Command::Train(args) => commands::run_train(args),
        Command::Fidelity(args) => commands::run_fidelity(args),
        Command::Ursell(args) => commands::run_ursell(args),
        Command::PhaseDiagram(args) => commands::run_phase_diagram(args),
        Command::Path(args) => commands::run_path(args),
        Command::RfReport(args) => commands::run_rf_report(args),
        Command::ScalingStudy(args) => commands::run_scaling_study(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
