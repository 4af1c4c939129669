use std::fmt;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

mod commands;
mod opts;
mod table;

use opts::{read_config, Cli, RunSpec};

/// Failure with its process exit code: 2 for bad input, 3 for numerical failure.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }

    pub fn io(e: std::io::Error) -> Self {
        CliError { code: 3, msg: e.to_string() }
    }
}

impl From<lowk_core::Error> for CliError {
    fn from(e: lowk_core::Error) -> Self {
        CliError {
            code: if e.is_validation() { 2 } else { 3 },
            msg: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

/// Attach a description of what was being computed.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for lowk_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|e| {
            let mut c = CliError::from(e);
            c.msg = format!("{}: {}", what(), c.msg);
            c
        })
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    let (kind, flags) = cli.command.split();
    let opts = match &cli.config {
        Some(path) => flags.over(read_config(path)?),
        None => flags,
    };
    let env_tol = std::env::var("LOWK_GREEN_TOL").ok();
    let spec = RunSpec::resolve(kind, opts, env_tol.as_deref())?;
    let text = commands::execute(&spec)?;
    match &spec.output {
        Some(path) => std::fs::write(path, text).map_err(CliError::io),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(CliError::io),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lowk-green: {e}");
            ExitCode::from(e.code)
        }
    }
}
