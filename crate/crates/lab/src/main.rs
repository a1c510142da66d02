use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geomech_lab::config::{Experiment, ExperimentConfig};
use geomech_lab::run::{run, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "geomech-lab", version, about = "Double-monopole and exotic planar experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized point sets; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one initial condition and write its trajectory.
    Simulate(Common),
    /// Integrate an ensemble in parallel, one CSV per trajectory.
    Scatter(Common),
    /// Measure the transverse shift caused by a momentum-space monopole.
    Shift(Common),
    /// Run double-monopole orbits and report capture diagnostics.
    Capture(Common),
    /// Check the closure equations of a field model at random points.
    ClosureCheck(Common),
    /// Tabulate coordinate brackets, Jacobi residuals and pfaffians.
    Brackets(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::Simulate(c) => (Experiment::Simulate, c),
        Command::Scatter(c) => (Experiment::Scatter, c),
        Command::Shift(c) => (Experiment::Shift, c),
        Command::Capture(c) => (Experiment::Capture, c),
        Command::ClosureCheck(c) => (Experiment::ClosureCheck, c),
        Command::Brackets(c) => (Experiment::Brackets, c),
    };
    let fail = |msg: String| {
        eprintln!("{msg}");
        ExitCode::from(EXIT_CONFIG as u8)
    };
    let mut cfg = match ExperimentConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => return fail(format!("{}: {e}", common.config.display())),
    };
    if let Some(declared) = cfg.experiment {
        if declared != experiment {
            return fail(format!(
                "{}: config is for `{}`, not `{}`",
                common.config.display(),
                declared.as_str(),
                experiment.as_str()
            ));
        }
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = common.out {
        cfg.output.dir = out.display().to_string();
    }
    let outcome = run(&cfg, experiment);
    for line in &outcome.messages {
        eprintln!("{line}");
    }
    ExitCode::from(outcome.code as u8)
}
