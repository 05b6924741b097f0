//! Dense primal-dual interior-point solver for convex QPs and LPs.

mod ipm;
mod kkt_residual;

pub use ipm::{solve_program, ConvexProgram, ProgramDuals, ProgramSolution, ProgramStatus, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use kkt_residual::kkt_residual;
