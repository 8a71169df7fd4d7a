//! Command-line driver: reads a JSON run configuration, runs one experiment
//! and writes CSV tables plus a `report.txt` verdict to the output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::commands::{theorem_id, Report};
use crate::config::Loaded;
use crate::error::{CliError, Status};

#[derive(Debug, Parser)]
#[command(name = "parabolic", version, about)]
struct Args {
    /// JSON run configuration.
    config: PathBuf,
    /// Seed for randomized probes; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let status = match Loaded::read(&args.config) {
        Ok(cfg) => run(&cfg, &args),
        Err(e) => {
            eprintln!("error: {e}");
            e.status()
        }
    };
    ExitCode::from(status as u8)
}

fn run(cfg: &Loaded, args: &Args) -> Status {
    let out = cfg.output_dir(args.out.as_deref());
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return Status::InvalidInput;
    }
    let report = match commands::run(cfg, &out, args.seed) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            let failed = Report {
                theorem: theorem_id(cfg.config.command),
                pass: false,
                lines: vec![("error".into(), e.to_string())],
            };
            if let Err(w) = failed.write(&out) {
                eprintln!("error: {}", CliError::from(w));
            }
            return e.status();
        }
    };
    if let Err(e) = report.write(&out) {
        eprintln!("error: {}", CliError::from(e));
        return Status::InvalidInput;
    }
    println!(
        "{}: {}",
        report.theorem,
        if report.pass { "PASS" } else { "FAIL" }
    );
    report.status()
}
