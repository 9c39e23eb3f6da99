//! `vsaudit` command-line tool.

mod args;
mod audit_cmd;
mod baseline_cmd;
mod metrics_cmd;
mod mol_cmd;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

pub const EXIT_FINDINGS: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match &cli.command {
        Command::Audit(a) => audit_cmd::run(a),
        Command::Baseline(a) => baseline_cmd::run(a),
        Command::Metrics(a) => metrics_cmd::run(a),
        Command::Canonicalize(a) => mol_cmd::canonicalize(a),
        Command::Fp(a) => mol_cmd::fingerprint(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
