//! Krylov, quasi-Newton and least-squares kernels for the SQP subproblems.

mod hessian;
mod lbfgs;
mod lsq;
mod minres;

use crate::dense::Matrix;

pub use hessian::{HessianModel, KktOperator};
pub use lbfgs::{LbfgsModel, CURVATURE_THRESHOLD};
pub use lsq::{kkt_norm, least_squares_dual, RANK_CONDITION_LIMIT};
pub use minres::{minres_solve, KrylovReport, MinresOptions, StopReason};

/// A linear map `v -> A v` with `A` symmetric.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// Writes `A v` into `out`.
    fn apply(&self, v: &[f64], out: &mut [f64]);
}

impl SymmetricOperator for Matrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.mul_vec_into(v, out)
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply(v, out)
    }
}

/// Materializes an operator column by column.
pub fn to_dense<A: SymmetricOperator + ?Sized>(op: &A) -> Matrix {
    let n = op.dim();
    let mut m = Matrix::zeros(n, n);
    let mut e = alloc::vec![0.0; n];
    let mut col = alloc::vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    m
}
