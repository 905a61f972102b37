//! Command-line driver for training and evaluating function encoders.

pub mod commands;
pub mod config;
pub mod error;
pub mod eval;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Common;
use crate::config::{RunConfig, Sweep};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "fenc", version, about = "Train, evaluate and ablate function encoders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Config file with [section] headers and key = value lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed; sets encoder.seed for train and run.seeds for eval/ablate.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Byte-identical outputs: zero wall-clock columns, no timestamps.
    #[arg(long)]
    pub reproducible: bool,
    /// Override a setting, e.g. `--set encoder.k=5`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model, writing it with metrics CSV/JSON and plots.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate a saved model on freshly sampled tasks of each transfer type.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        model: PathBuf,
        /// Also score the other coefficient method with the same basis.
        #[arg(long)]
        compare_ip: bool,
    },
    /// Sweep basis counts or example counts over several seeds.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        /// basis_counts or example_counts.
        #[arg(long)]
        sweep: Option<String>,
        /// Comma-separated values, e.g. 1,2,3,5,10.
        #[arg(long)]
        values: Option<String>,
    },
    /// Classify a target function against source functions (type 1/2/3).
    Classify {
        #[command(flatten)]
        common: CommonArgs,
        /// CSV with x_* and y_* columns.
        #[arg(long)]
        target: PathBuf,
        /// Source CSVs sampled on the target's inputs. Repeatable.
        #[arg(long = "source", required = true)]
        sources: Vec<PathBuf>,
    },
}

fn load(common: &CommonArgs, extra: Vec<String>, seed_key: &str) -> CliResult<(RunConfig, Common)> {
    let mut overrides = common.overrides.clone();
    overrides.extend(extra);
    if let Some(seed) = common.seed {
        overrides.push(format!("{seed_key}={seed}"));
    }
    let cfg = RunConfig::load(common.config.as_deref(), &overrides)?;
    Ok((
        cfg,
        Common {
            out: common.out.clone(),
            reproducible: common.reproducible,
        },
    ))
}

/// Runs a parsed command, returning its JSON report.
pub fn execute(cli: Cli) -> CliResult<serde_json::Value> {
    match cli.command {
        Command::Train { common } => {
            let (cfg, c) = load(&common, Vec::new(), "encoder.seed")?;
            commands::cmd_train(&cfg, &c)
        }
        Command::Eval {
            common,
            model,
            compare_ip,
        } => {
            let extra = if compare_ip { vec!["run.compare_ip=true".into()] } else { Vec::new() };
            let (cfg, c) = load(&common, extra, "run.seeds")?;
            commands::cmd_eval(&cfg, &model, &c)
        }
        Command::Ablate { common, sweep, values } => {
            let mut extra = Vec::new();
            if let Some(s) = sweep {
                Sweep::parse(&s)?;
                extra.push(format!("ablate.sweep={s}"));
            }
            if let Some(v) = values {
                extra.push(format!("ablate.values={v}"));
            }
            let (cfg, c) = load(&common, extra, "run.seeds")?;
            commands::cmd_ablate(&cfg, &c)
        }
        Command::Classify {
            common,
            target,
            sources,
        } => {
            let (cfg, c) = load(&common, Vec::new(), "encoder.seed")?;
            commands::cmd_classify(&cfg, &target, &sources, &c)
        }
    }
}

/// Parses `args`, runs, prints the report, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).unwrap_or_default());
            0
        }
        Err(e) => {
            eprintln!("fenc: {e}");
            e.exit_code()
        }
    }
}

impl From<clap::Error> for CliError {
    fn from(e: clap::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
