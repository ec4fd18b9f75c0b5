mod config;
mod render;
mod run;

use std::process::ExitCode;

use config::{parse_config, UsageError};

fn main() -> ExitCode {
    let cfg = match parse_config(std::env::args_os(), None) {
        Ok(c) => c,
        Err(UsageError::Help(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(UsageError::Clap(text)) => {
            eprint!("{text}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run::run(cfg) {
        Ok(out) => ExitCode::from(out.code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
