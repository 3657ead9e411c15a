use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use conewton_bench::args::Cli;
use conewton_bench::commands::{run, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("conewton: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
