use std::process::ExitCode;

use clap::Parser;
use phav::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("phav: {e}");
            ExitCode::FAILURE
        }
    }
}
