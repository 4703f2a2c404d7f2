//! `morbit`: batch runner for mean orbital pseudo-metric experiments.

mod config;
mod describe;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Arithmetic, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid {field}: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Library(#[from] morbit::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> CliError {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Library(morbit::Error::CapExceeded { .. }) => 3,
            CliError::Io(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "morbit", version, about = "Mean orbital pseudo-metric experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write its artifacts.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Check a configuration without running it.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Describe an experiment kind's parameters and outputs.
    Describe { kind: String },
}

#[derive(Args, Debug, Clone)]
pub struct RunOpts {
    /// Directory receiving the artifacts.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Keep exact rational arithmetic.
    #[arg(long, conflicts_with = "float")]
    pub exact: bool,
    /// Convert all points to binary64.
    #[arg(long)]
    pub float: bool,
}

impl RunOpts {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.exact {
            cfg.arithmetic = Arithmetic::Exact;
        }
        if self.float {
            cfg.arithmetic = Arithmetic::Float;
        }
    }
}

fn load(path: &PathBuf, opts: &RunOpts) -> Result<(Vec<u8>, ExperimentConfig), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&bytes)?;
    opts.apply(&mut cfg);
    if let Some(n) = opts.threads {
        if n == 0 {
            return Err(CliError::config("--threads", "must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config("--threads", e.to_string()))?;
    }
    Ok((bytes, cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Describe { kind } => describe::describe(kind).map(|text| {
            print!("{text}");
            0
        }),
        Command::Validate { config, opts } => load(config, opts).and_then(|(_, cfg)| {
            run::validate(&cfg)?;
            println!("ok: {} configuration is valid", cfg.kind);
            Ok(0)
        }),
        Command::Run { config, opts } => {
            load(config, opts).and_then(|(bytes, cfg)| run::run(&bytes, &cfg, &opts.out_dir))
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("morbit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
