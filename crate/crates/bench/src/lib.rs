//! Benchmark harness for `rasqp-core`: LIBSVM input, run configuration,
//! the problem registry, CSV traces, performance profiles and active-set
//! reports. The `ra-sqp` binary wraps these.

pub mod active_set;
pub mod config;
pub mod error;
pub mod harness;
pub mod libsvm;
pub mod profile;
pub mod registry;
pub mod sweep;
pub mod trace;

pub use config::{Method, ProblemParams, RunConfig, SamplingSpec, Settings};
pub use error::{BenchError, Result};
pub use harness::{execute, ResultRow, RunRecord};
