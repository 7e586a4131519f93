mod commands;
mod config;
mod io;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use config::{Cli, Command, RunConfig};

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    let config = cli.config.as_deref();
    match cli.command {
        Command::RiskCurve(f) => commands::risk_curve(&RunConfig::resolve(f, config)?).map(|_| true),
        Command::Verify(f) => commands::verify(&RunConfig::resolve(f, config)?),
        Command::SelectThreshold(f) => commands::select_threshold(&RunConfig::resolve(f, config)?).map(|_| true),
        Command::Denoise(f) => commands::denoise_cmd(&RunConfig::resolve(f, config)?).map(|_| true),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
