//! `bulkedge`: bulk and edge Hall conductances from a JSON run config.
//!
//! Exit codes: 0 on success (possibly with warnings), 2 for an invalid
//! configuration (nothing is written), 3 when a computation fails.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use bulkedge::Workers;
use config::{Format, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bulkedge", version, about = "Bulk and edge Hall conductances of disordered lattice models")]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// JSON run configuration merged over the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one field, e.g. `--set model.flux.q=4` or `--set 'T_grid=[10,100]'`.
    #[arg(long = "set", value_name = "KEY=VALUE", action = clap::ArgAction::Append)]
    sets: Vec<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Print the schema of the output columns and exit.
    #[arg(long)]
    print_schema: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_schema {
        print!("{}", output::SCHEMA);
        return ExitCode::SUCCESS;
    }
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: config {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let mut sets = cli.sets.clone();
    if let Some(f) = cli.format {
        sets.push(format!("format={}", serde_json::to_value(f).expect("format serializes")));
    }
    let cfg = match config::resolve(cli.subcommand, text.as_deref(), &sets) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(2);
        }
    };
    if cfg.verbosity > 0 {
        eprintln!("bulkedge {}: config {}", cfg.subcommand.name(), cfg.hash());
    }
    let table = match commands::run(&cfg, &cli.out, Workers(cli.workers)) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {} failed: {e}", cfg.subcommand.name());
            return ExitCode::from(3);
        }
    };
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    match output::write(&cfg, &table, &cli.out) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: writing output: {e}");
            ExitCode::from(3)
        }
    }
}
