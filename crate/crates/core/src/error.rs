//! Crate-wide error type.

use std::fmt;

use crate::sim::Trajectory;

/// Errors produced by compilation, solving and simulation.
#[derive(Debug)]
pub enum Error {
    /// Mismatched vector/matrix dimensions or incompatible bases.
    Dimension(String),
    /// Invalid configuration values (bounds, weights, horizons, schemas).
    Config(String),
    /// Numerical failure (non-finite values, divergence).
    Numerical(String),
    /// A compiled problem exceeds a configured variable cap.
    Capacity { needed: usize, cap: usize, what: String },
    /// Solver-level failure.
    Solver(String),
    /// Closed-loop run aborted at `step`; the trajectory up to that step is kept.
    Simulation {
        step: usize,
        source: Box<Error>,
        partial: Box<Trajectory>,
    },
    /// File format violation in a QUBO/model/config document.
    Parse(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::Capacity { needed, cap, what } => {
                write!(f, "{what} needs {needed} variables, cap is {cap}")
            }
            Error::Solver(msg) => write!(f, "solver failure: {msg}"),
            Error::Simulation { step, source, .. } => {
                write!(f, "simulation aborted at step {step}: {source}")
            }
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Simulation { source, .. } => Some(source),
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
