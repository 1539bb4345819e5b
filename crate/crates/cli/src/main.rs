use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use symbiosis_cli::{run_command, Command, RunConfig, OUT_DIR_ENV};

/// Simulate A/B tests of recommender systems and measure symbiosis bias.
#[derive(Debug, Parser)]
#[command(name = "symbiosis", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for assignment in &cli.overrides {
        config.apply_override(assignment)?;
    }
    if let Some(seed) = cli.seed {
        config.params.seed = seed;
    }
    if let Some(r) = cli.replications {
        config.replications = r;
    }
    match (&cli.out, std::env::var_os(OUT_DIR_ENV)) {
        (Some(out), _) => config.out = out.clone(),
        (None, Some(env)) if !env.is_empty() => config.out = PathBuf::from(env),
        _ => {}
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = resolve(&cli)
        .context("invalid configuration")
        .and_then(|config| run_command(cli.command, &config));
    match result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: verification tolerance violated");
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
