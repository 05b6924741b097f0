use alloc::vec;

use super::{to_dense, LbfgsModel, SymmetricOperator};
use crate::dense::Matrix;
use crate::math::dot;

/// The Lagrangian-Hessian approximation used by the SQP solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum HessianModel {
    Identity(usize),
    Lbfgs(LbfgsModel),
}

impl HessianModel {
    /// `dᵀHd`
    pub fn quad(&self, d: &[f64]) -> f64 {
        match self {
            HessianModel::Identity(_) => dot(d, d),
            HessianModel::Lbfgs(m) => dot(d, &m.apply_vec(d)),
        }
    }

    pub fn dense(&self) -> Matrix {
        match self {
            HessianModel::Identity(n) => Matrix::identity(*n),
            HessianModel::Lbfgs(m) => to_dense(m),
        }
    }

    /// Quasi-Newton update; a no-op for the identity model.
    pub fn update(&mut self, s: &[f64], y: &[f64]) -> bool {
        match self {
            HessianModel::Identity(_) => false,
            HessianModel::Lbfgs(m) => m.update(s, y),
        }
    }
}

impl SymmetricOperator for HessianModel {
    fn dim(&self) -> usize {
        match self {
            HessianModel::Identity(n) => *n,
            HessianModel::Lbfgs(m) => m.dim(),
        }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        match self {
            HessianModel::Identity(_) => out.copy_from_slice(v),
            HessianModel::Lbfgs(m) => m.apply(v, out),
        }
    }
}

/// The saddle-point matrix `[[H, Jᵀ], [J, 0]]`.
#[derive(Debug, Clone, Copy)]
pub struct KktOperator<'a> {
    pub h: &'a HessianModel,
    pub j: &'a Matrix,
}

impl SymmetricOperator for KktOperator<'_> {
    fn dim(&self) -> usize {
        self.h.dim() + self.j.rows()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.h.dim();
        let (vx, vl) = v.split_at(n);
        let (ox, ol) = out.split_at_mut(n);
        self.h.apply(vx, ox);
        if self.j.rows() > 0 {
            let mut jt = vec![0.0; n];
            self.j.tr_mul_vec_into(vl, &mut jt);
            ox.iter_mut().zip(&jt).for_each(|(a, b)| *a += b);
            self.j.mul_vec_into(vx, ol);
        }
    }
}
