//! Configuration-driven runner for the resolab experiments.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::json;

use crate::commands::{execute, Command, RunError};
use crate::config::{Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "resolab", version, about = "Resonance and decay experiments for the Friedrichs model")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration; defaults apply to every omitted field.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Data file; overrides `output.path`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `output.format`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// `path=value` override, e.g. `--set model.lambda=0.05`; repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub overrides: Vec<String>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub print_config: bool,
}

impl clap::ValueEnum for Format {
    fn value_variants<'a>() -> &'a [Self] {
        &[Format::Csv, Format::Json]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }))
    }
}

/// Parses arguments, runs, and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("resolab {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

pub fn effective_config(cli: &Cli) -> Result<RunConfig, RunError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(p) = &cli.out {
        cfg.output.path = Some(p.clone());
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), RunError> {
    let cfg = effective_config(cli)?;
    if cli.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("json serialization"));
        return Ok(());
    }
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let report = execute(cli.command, &cfg)?;
    let body = report.render(cfg.output.format, cfg.output.precision);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match &cfg.output.path {
        Some(path) => {
            let meta = json!({
                "tool": "resolab",
                "version": env!("CARGO_PKG_VERSION"),
                "command": cli.command.name(),
                "data_file": path,
                "config": cfg,
                "summary": report.summary,
                "warnings": report.warnings,
                "started_unix": started,
                "elapsed_seconds": clock.elapsed().as_secs_f64(),
            });
            output::write_files(path, &body, &meta)?;
            for (k, v) in &report.summary {
                println!("{k} = {v}");
            }
        }
        None => print!("{body}"),
    }
    Ok(())
}
