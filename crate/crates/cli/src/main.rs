//! Command-line driver: compile control problems to binary quadratic form,
//! solve problem files, run closed-loop simulations and verify the
//! compilation identities.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical or solver
//! failure, 4 verification failure.

mod commands;
mod config;
mod verify;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{BackendKind, Overrides};
use qmpc::error::Error;
use qmpc::solve::SaSchedule;

#[derive(Parser)]
#[command(name = "qmpc", version, about = "Polynomial MPC to QUBO compiler, solvers and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile an experiment's control problem and write problem files.
    Compile {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's out_dir or `.`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the encoding width.
        #[arg(long)]
        nb: Option<u32>,
    },
    /// Solve a compiled problem file (coordinate list or JSON).
    Solve {
        #[arg(long)]
        qubo: PathBuf,
        #[arg(long, value_enum, default_value = "sa")]
        backend: BackendKind,
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        beta_start: Option<f64>,
        #[arg(long)]
        beta_end: Option<f64>,
        /// Write the solution JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the closed-loop simulation and write trajectory and metrics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        backend: Option<BackendKind>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        nb: Option<u32>,
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Run a verification suite: qubo-identity, theorem1, ising, gadget, all.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Convert a problem file between formats (coo, json, ising).
    Export {
        #[arg(long)]
        qubo: PathBuf,
        #[arg(long)]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Compile { config, out, nb } => {
            let ov = Overrides {
                n_bits: nb,
                ..Overrides::default()
            };
            commands::cmd_compile(&config, out, &ov)?;
            Ok(0)
        }
        Command::Solve {
            qubo,
            backend,
            sweeps,
            restarts,
            seed,
            beta_start,
            beta_end,
            out,
        } => {
            let base = SaSchedule::default();
            let schedule = SaSchedule {
                sweeps: sweeps.unwrap_or(base.sweeps),
                restarts: restarts.unwrap_or(base.restarts),
                beta_start: beta_start.unwrap_or(base.beta_start),
                beta_end: beta_end.unwrap_or(base.beta_end),
                seed: seed.unwrap_or(base.seed),
            };
            commands::cmd_solve(&qubo, backend, schedule, out)?;
            Ok(0)
        }
        Command::Simulate {
            config,
            out,
            backend,
            seed,
            nb,
            sweeps,
            restarts,
        } => {
            let ov = Overrides {
                seed,
                backend,
                n_bits: nb,
                sweeps,
                restarts,
            };
            commands::cmd_simulate(&config, out, &ov)?;
            Ok(0)
        }
        Command::Verify { suite, seed } => {
            let failures = verify::cmd_verify(&suite, seed)?;
            Ok(if failures == 0 { 0 } else { 4 })
        }
        Command::Export { qubo, format, out } => {
            commands::cmd_export(&qubo, &format, &out)?;
            Ok(0)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("QMPC_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}
