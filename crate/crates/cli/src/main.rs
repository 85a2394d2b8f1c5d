use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dfvote_cli::{run, CliError, ConfigSource, ExperimentConfig, Kind, Outcome};

#[derive(Parser)]
#[command(name = "dfvote", version, about = "Seeded experiments on de Finetti voting models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw margin samples
    Simulate(Flags),
    /// Compare normalized margins with the limit law
    VerifyClt(Flags),
    /// Lattice sup-error of the local limit theorem along an n-grid
    VerifyLlt(Flags),
    /// Curie-Weiss representation and concentration checks
    VerifyCwm(Flags),
    /// Fit the per-capita margin exponent, from a model or a CSV
    EstimateAlpha(Flags),
    /// Pair-correlation decay along an n-grid
    CorrelationDecay(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// Experiment config (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Margin CSV for estimate-alpha
    #[arg(long)]
    input: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, flags) = match cli.command {
        Command::Simulate(f) => (Kind::Simulate, f),
        Command::VerifyClt(f) => (Kind::VerifyClt, f),
        Command::VerifyLlt(f) => (Kind::VerifyLlt, f),
        Command::VerifyCwm(f) => (Kind::VerifyCwm, f),
        Command::EstimateAlpha(f) => (Kind::EstimateAlpha, f),
        Command::CorrelationDecay(f) => (Kind::CorrelationDecay, f),
    };
    match execute(kind, flags) {
        Ok(outcome) => {
            report(&outcome);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(kind: Kind, flags: Flags) -> Result<Outcome, CliError> {
    let (mut config, source) = match &flags.config {
        Some(path) => {
            let (c, s) = ConfigSource::read(path)?;
            (c, Some(s))
        }
        // ingestion alone needs no config; there is nothing random to seed
        None if kind == Kind::EstimateAlpha && flags.input.is_some() => (ExperimentConfig::new(0), None),
        None => return Err(CliError::config(None, "--config is required")),
    };
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    if flags.out.is_some() {
        config.out = flags.out;
    }
    if flags.workers.is_some() {
        config.workers = flags.workers;
    }
    if flags.input.is_some() {
        config.input = flags.input;
    }
    run(&config, kind).map_err(|e| match &source {
        Some(s) => s.anchor(e),
        None => e,
    })
}

fn report(outcome: &Outcome) {
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for r in &outcome.reports {
        println!(
            "{} {} {} observed={:.6e} threshold={:.6e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.experiment,
            r.statistic,
            r.observed,
            r.threshold
        );
    }
    if let Some(fit) = &outcome.alpha {
        println!("α = {:.4}", fit.alpha);
    }
    eprintln!(
        "wrote {} ({}) config {}",
        outcome.out_dir.display(),
        outcome.artifacts.join(", "),
        &outcome.config_hash[..12]
    );
}
