//! Retrospective-approximation SQP for stochastic objectives under
//! deterministic nonlinear constraints.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the command
//! line harness and thread pools live in the companion `rasqp` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod counters;
pub mod dense;
pub mod driver;
pub mod error;
pub mod math;
pub mod linalg;
pub mod problem;
pub mod qp;
pub mod sqp;

pub use counters::Counters;
pub use dense::{Cholesky, Matrix};
pub use error::{Error, Result};
