//! `lawcast`: command-line driver for bill enactment forecasting.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, Usage, KEYS};

#[derive(Parser)]
#[command(
    name = "lawcast",
    version,
    about = "Forecast bill enactment from text and context",
    after_help = "Configuration keys are set in a key = value file (--config) and overridden with --key=value.\nRun `lawcast keys` to list them."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// key = value config file, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a bill file (JSONL or CSV) and write normalized JSONL.
    Ingest(Common),
    /// Generate a synthetic corpus with planted signal.
    Synth(Common),
    /// Fit a deployable system for one target congress.
    Train(Common),
    /// Score bills with a trained system.
    Predict(Common),
    /// Walk-forward evaluation over congresses.
    Walkforward(Common),
    /// Metrics, comparisons and plot data from walk-forward predictions.
    Evaluate(Common),
    /// Words nearest a signed query in one language model.
    Similar(Common),
    /// Topic summaries across the four chamber and outcome models.
    Summary(Common),
    /// Partial rank correlation sensitivity analysis.
    Sensitivity(Common),
    /// Corpus statistics by congress and chamber.
    Profile(Common),
    /// List configuration keys and defaults.
    Keys,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Synth(_) => "synth",
            Command::Train(_) => "train",
            Command::Predict(_) => "predict",
            Command::Walkforward(_) => "walkforward",
            Command::Evaluate(_) => "evaluate",
            Command::Similar(_) => "similar",
            Command::Summary(_) => "summary",
            Command::Sensitivity(_) => "sensitivity",
            Command::Profile(_) => "profile",
            Command::Keys => "keys",
        }
    }

    fn common(&self) -> Option<&Common> {
        match self {
            Command::Ingest(c)
            | Command::Synth(c)
            | Command::Train(c)
            | Command::Predict(c)
            | Command::Walkforward(c)
            | Command::Evaluate(c)
            | Command::Similar(c)
            | Command::Summary(c)
            | Command::Sensitivity(c)
            | Command::Profile(c) => Some(c),
            Command::Keys => None,
        }
    }
}

/// Splits `--key=value` overrides from the arguments clap understands.
fn split_args(args: Vec<String>) -> (Vec<String>, Vec<String>) {
    let mut clap_args = Vec::new();
    let mut overrides = Vec::new();
    for (i, a) in args.into_iter().enumerate() {
        let is_override = i > 0 && a.starts_with("--") && a.contains('=') && !a.starts_with("--config=");
        if is_override {
            overrides.push(a);
        } else {
            clap_args.push(a);
        }
    }
    (clap_args, overrides)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match e.downcast_ref::<lawcast::Error>() {
        Some(err) if err.is_validation() => 1,
        _ => 2,
    }
}

fn run(command: &Command, common: &Common, overrides: &[String]) -> anyhow::Result<()> {
    let started = Instant::now();
    let config = RunConfig::load(common.config.as_deref(), overrides)?;
    let threads: usize = config.get("threads")?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| anyhow::anyhow!("cannot start thread pool: {e}"))?;
    let output = match command {
        Command::Ingest(_) => commands::ingest(&config)?,
        Command::Synth(_) => commands::synth(&config)?,
        Command::Train(_) => commands::train(&config)?,
        Command::Predict(_) => commands::predict(&config)?,
        Command::Walkforward(_) => commands::walkforward(&config)?,
        Command::Evaluate(_) => commands::evaluate(&config)?,
        Command::Similar(_) => commands::similar(&config)?,
        Command::Summary(_) => commands::summary(&config)?,
        Command::Sensitivity(_) => commands::sensitivity(&config)?,
        Command::Profile(_) => commands::profile(&config)?,
        Command::Keys => unreachable!("handled before configuration"),
    };
    let path = manifest::write(command.name(), &config, &output, started.elapsed())?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let (clap_args, overrides) = split_args(std::env::args().collect());
    let cli = match Cli::try_parse_from(clap_args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Some(common) = cli.command.common().cloned() else {
        for (k, v) in KEYS {
            println!("{k} = {v}");
        }
        return ExitCode::SUCCESS;
    };
    let level = match common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli.command, &common, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
