mod cli;
mod commands;
mod config;

use clap::Parser;

/// CLI-level error: a machine-parsable category plus human detail.
#[derive(Debug)]
pub struct CliError {
    category: &'static str,
    message: String,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self {
            category: "config",
            message,
        }
    }

    pub fn data(message: String) -> Self {
        Self {
            category: "data",
            message,
        }
    }

    pub fn internal(message: String) -> Self {
        Self {
            category: "internal",
            message,
        }
    }
}

impl From<ifr_core::Error> for CliError {
    fn from(e: ifr_core::Error) -> Self {
        Self {
            category: e.category(),
            message: e.to_string(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error[{}]: {}", self.category, self.message)
    }
}

fn main() {
    let cli = cli::Cli::parse();
    let result = match &cli.command {
        cli::Command::Simulate(args) => commands::cmd_simulate(args),
        cli::Command::Fit(args) => commands::cmd_fit(args),
        cli::Command::Predict(args) => commands::cmd_predict(args),
        cli::Command::Evaluate(args) => commands::cmd_evaluate(args),
        cli::Command::McStudy(args) => commands::cmd_mc_study(args),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
