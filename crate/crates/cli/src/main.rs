//! `eiot`: command-line front end for the eiot-core analysis toolkit.
//!
//! Exit status: 0 success, 2 usage error, 3 data error, 4 numerical failure.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use eiot_core::{ErrorClass, MODEL_FORMAT_VERSION};

use args::Cli;

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(eiot_core::Error),
}

impl From<eiot_core::Error> for Failure {
    fn from(e: eiot_core::Error) -> Self {
        Failure::Core(e)
    }
}

pub type Outcome = Result<(), Failure>;

fn version() -> String {
    format!("{} (model format {MODEL_FORMAT_VERSION})", env!("CARGO_PKG_VERSION"))
}

fn main() -> ExitCode {
    let cmd = Cli::command().version(&*version().leak());
    let matches = match cmd.try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(cli.log_level()))
        .format_timestamp(None)
        .init();

    let name = cli.command.name();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try 'eiot {name} --help'.");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {name}: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 2,
                ErrorClass::Data => 3,
                ErrorClass::Numerical => 4,
            })
        }
    }
}
