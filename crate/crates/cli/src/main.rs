use std::process::ExitCode;

use clap::Parser;
use lychaos_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("lychaos: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
