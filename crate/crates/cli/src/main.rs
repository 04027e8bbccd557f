use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{ClassifyArgs, EvaluateArgs, InterveneArgs, JudgmentsArgs, ListsArgs, ReportArgs};

/// Passivization experiments: corpus interventions, stimuli, scoring and analysis.
#[derive(Debug, Parser)]
#[command(name = "passlab", version)]
struct Cli {
    /// Run configuration (TOML); a previous run's manifest.toml replays it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count active, passive and other uses of verb lemmas.
    Classify(ClassifyArgs),
    /// Apply a frequency or swap intervention to a parsed corpus.
    Intervene(InterveneArgs),
    /// Score a minimal-pair suite and compute model passive drops.
    Evaluate(EvaluateArgs),
    /// Generate minimal pairs and the counterbalanced presentation lists.
    Lists(ListsArgs),
    /// Analyse human judgments: exclusions, passive drops, reliability.
    Judgments(JudgmentsArgs),
    /// Compare baseline and intervened passive drops.
    Report(ReportArgs),
    /// Serve the built-in n-gram scorer over the external scorer protocol.
    #[command(hide = true)]
    ServeNgram(ServeArgs),
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 0.75)]
    discount: f64,
}

/// Invalid invocation or input; exits with code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ServeNgram(a) => commands::serve_ngram(&a.train, a.order, a.discount),
        command => commands::Context::new(cli.config, cli.seed, cli.out).and_then(|ctx| match command {
            Command::Classify(a) => commands::classify(&ctx, a),
            Command::Intervene(a) => commands::intervene(&ctx, a),
            Command::Evaluate(a) => commands::evaluate(&ctx, a),
            Command::Lists(a) => commands::lists(&ctx, a),
            Command::Judgments(a) => commands::judgments(&ctx, a),
            Command::Report(a) => commands::report(&ctx, a),
            Command::ServeNgram(_) => unreachable!(),
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
