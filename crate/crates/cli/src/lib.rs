//! Command-line driver: argument parsing, subcommands and report output.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;
pub mod step;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use args::Cli;
use error::CliError;
use report::{Provenance, Report};

/// Runs a parsed command line and returns the process exit code:
/// 0 on success, 1 for I/O failures, 2 for invalid input, 3 when a size cap
/// stops the computation (partial results are still written).
pub fn run(cli: &Cli) -> u8 {
    let result = cdg_core::mixing::with_workers(cli.workers, || commands::dispatch(&cli.command))
        .map_err(CliError::from)
        .and_then(|r| r);
    match result.and_then(|report| emit(cli, &report).map(|_| report)) {
        Ok(report) if report.incomplete.is_some() => 3,
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(cli: &Cli, report: &Report) -> Result<(), CliError> {
    let config = serde_json::to_value(&cli.command)?;
    let prov = Provenance {
        tool: "cdg",
        version: env!("CARGO_PKG_VERSION"),
        command: commands::command_name(&cli.command),
        config,
        generated_at: (!cli.no_timestamp).then(|| {
            SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
        }),
    };
    let mut out: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    report.write(&mut out, cli.format, &prov)?;
    out.flush()?;
    Ok(())
}
