//! Compilation of receding-horizon polynomial control problems into binary
//! quadratic form, with classical solvers and a closed-loop simulator.
//!
//! The pipeline: a polynomial plant model is expanded around zero command
//! into a factorized multi-step predictor ([`predict`]), the tracking
//! objective collapses into a quadratic form over the monomial vector
//! ([`pmpc`]), commands are fixed-point encoded into bits and the objective
//! compiled into a symmetric binary quadratic matrix with degree-reduction
//! gadgets and penalty-based polynomial constraints ([`qubo`]). Compiled
//! problems are minimized exhaustively or by simulated annealing
//! ([`solve`]), and the whole chain drives a receding-horizon loop against a
//! Runge-Kutta integrated plant ([`sim`]).

pub mod error;
pub mod model;
pub mod pmpc;
pub mod polyalg;
pub mod predict;
pub mod qubo;
pub mod sim;
pub mod solve;

pub use error::{Error, Result};
