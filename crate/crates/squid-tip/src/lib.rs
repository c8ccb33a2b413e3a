//! rf-SQUID flux qubit simulator.
//!
//! Solves the double-well eigenproblem for a flux-biased rf SQUID, propagates
//! the qubit state through trains of critical-current-suppressing SFQ pulses,
//! and designs pulse schedules that rotate the qubit by a target angle.
//!
//! See the `examples/` directory for one runnable example per capability, and
//! the `squid-tip` binary for the CSV-producing command line front end.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod model;
pub mod spectral;
mod tridiag;

pub use error::{Result, SquidError};
pub use model::{beta_l, nondimensionalize, potential, Constants, ScaledParams, SquidParams};
pub use spectral::{
    classify_parity, discretize, eigensolve, levels_below_barrier, EigenSystem, GridSpec, Parity,
};
