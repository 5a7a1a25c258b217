mod args;
mod commands;
mod inputs;
mod support;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::support::Failure;

fn init_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("DCG_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| support::usage(format!("DCG_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Run(e.into()))
}

fn main() -> ExitCode {
    let result = support::expand_config(std::env::args_os().collect()).and_then(|argv| {
        let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
        init_threads()?;
        commands::run(&cli.command)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
