mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use config::JobConfig;
use run::{Stage, StageError};

/// Quantize, classify and test operators in the Hermite basis from a TOML job file.
#[derive(Debug, Parser)]
#[command(name = "hpsido", version)]
struct Args {
    /// Job description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for output artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
    /// Skip metadata.json so repeated runs are byte-identical.
    #[arg(long)]
    no_metadata: bool,
}

fn load(args: &Args) -> Result<JobConfig, StageError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| StageError {
        stage: Stage::Config,
        error: anyhow::Error::from(e).context(format!("reading {}", args.config.display())),
    })?;
    JobConfig::from_toml(&text).map_err(|e| StageError {
        stage: Stage::Config,
        error: e.into(),
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: config stage failed: {e}");
            return ExitCode::from(2);
        }
    }
    let result = load(&args).and_then(|cfg| run::run(&cfg, &args.out, !args.no_metadata));
    match result {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let out = json!({ "status": "error", "stage": e.stage, "message": format!("{:#}", e.error) });
            println!("{out}");
            ExitCode::FAILURE
        }
    }
}
