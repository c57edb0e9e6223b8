//! `machian`: file-based front end to the numerical toolkit.
//!
//! Exit codes: 0 ok, 1 selftest failure, 2 input or domain error,
//! 3 non-convergence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use machian_core::Error;

#[derive(Parser, Debug)]
#[command(name = "machian", version, about = "Machian quantum potential experiments")]
struct Cli {
    #[command(flatten)]
    shared: args::Shared,
    #[command(subcommand)]
    command: commands::Command,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let non_convergence = e.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<Error>(),
            Some(Error::BoundaryMinimum { .. } | Error::RefinementNotDecreasing { .. } | Error::NormDrift { .. })
        )
    });
    if non_convergence {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli.shared, &cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
