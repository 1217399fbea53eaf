//! Command-line front end: argument handling, report assembly and the JSON
//! and CSV writers. The binary in `main.rs` only wires these together.

pub mod commands;
pub mod config;
pub mod output;

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;

use crate::commands::{run, Outcome};
use crate::config::{Cli, CommandKind, Format, RunConfig, UsageError};
use crate::output::{checks_csv, convergence_csv, profile_csv, spectrum_csv, to_json, Payload};

pub const EXIT_USAGE: i32 = 2;

/// Serializes an outcome in the requested format.
pub fn render(outcome: &Outcome) -> std::io::Result<String> {
    let report = &outcome.report;
    let io = |e: csv::Error| std::io::Error::other(e);
    match report.config.format {
        Format::Json => to_json(report).map_err(std::io::Error::other),
        Format::Csv => match (&report.config.command, &report.data, &outcome.profile) {
            (CommandKind::Spectrum, Some(Payload::Spectrum(rows)), _) => {
                spectrum_csv(rows).map_err(io)
            }
            (CommandKind::Shoot, _, Some(rows)) => profile_csv(rows).map_err(io),
            (CommandKind::Sweep, _, _) if report.error.is_none() => {
                convergence_csv(&report.convergence).map_err(io)
            }
            _ => checks_csv(&report.checks).map_err(io),
        },
    }
}

/// Runs the command line in `args` and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let (kind, args) = cli.command.split();
    let prepared =
        RunConfig::from_args(kind, &args).and_then(|cfg| config::thread_budget().map(|t| (cfg, t)));
    let (cfg, threads) = match prepared {
        Ok(v) => v,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };

    let mut outcome = run(&cfg, threads);
    if !args.no_timestamp {
        outcome.report.timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    if let Some(err) = &outcome.report.error {
        eprintln!("error: {err}");
    }
    let text = match render(&outcome) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot serialize report: {e}");
            return 1;
        }
    };
    let written = match &args.out {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return 1;
    }
    outcome.report.exit_code()
}
