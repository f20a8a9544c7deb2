use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use odfusion::pipeline::{self, DataSource, PipelineError, RunConfig};

#[derive(Parser)]
#[command(name = "odfusion", version, about = "Tollbooth/mobility fusion and hourly OD matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON). Defaults to 30 synthetic days on the Trondheim network.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for all artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic tollbooth.csv and routing.csv.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Number of days to generate.
        #[arg(long)]
        days: Option<u32>,
    },
    /// Train the fusion model (model.json).
    Train(Common),
    /// Evaluate the model (metrics.csv, residuals.csv, difference.csv).
    Eval(Common),
    /// Feature attributions (importance, SHAP and permutation CSVs).
    Explain(Common),
    /// Temporal stability report (stability.csv).
    Stability(Common),
    /// Hourly OD matrix with ledger and conservation audit.
    Route(Common),
}

fn config(common: &Common) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Synth { common, days } => {
            let mut cfg = config(&common)?;
            if let Some(d) = days {
                match &mut cfg.data {
                    DataSource::Synthetic(spec) => spec.days = d,
                    DataSource::Files { .. } => {
                        return Err(PipelineError::Usage("--days applies only to synthetic configs".into()))
                    }
                }
            }
            pipeline::cmd_synth(&cfg)
        }
        Command::Train(c) => pipeline::cmd_train(&config(&c)?),
        Command::Eval(c) => pipeline::cmd_eval(&config(&c)?),
        Command::Explain(c) => pipeline::cmd_explain(&config(&c)?),
        Command::Stability(c) => pipeline::cmd_stability(&config(&c)?),
        Command::Route(c) => pipeline::cmd_route(&config(&c)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
