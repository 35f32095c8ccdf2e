use std::process::ExitCode;

use cdg_cli::args::Cli;
use clap::Parser;

fn main() -> ExitCode {
    ExitCode::from(cdg_cli::run(&Cli::parse()))
}
