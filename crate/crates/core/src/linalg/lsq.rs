use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{Cholesky, Matrix};
use crate::error::{Error, Result};
use crate::math::{dot, sqrt};

/// `JJᵀ` with a condition estimate above this is treated as singular.
pub const RANK_CONDITION_LIMIT: f64 = 1e12;

/// Least-squares multipliers `λ = -(JJᵀ)⁻¹ J g`, the minimizer of
/// `‖g + Jᵀλ‖`.
pub fn least_squares_dual(j: &Matrix, g: &[f64]) -> Result<Vec<f64>> {
    let m = j.rows();
    if m == 0 {
        return Ok(Vec::new());
    }
    let gram = j.gram_rows();
    let chol = Cholesky::factor(&gram).ok_or(Error::RankDeficient { condition: f64::INFINITY })?;
    let condition = chol.condition_estimate();
    if !(condition <= RANK_CONDITION_LIMIT) {
        return Err(Error::RankDeficient { condition });
    }
    let mut rhs = j.mul_vec(g);
    rhs.iter_mut().for_each(|v| *v = -*v);
    chol.solve_in_place(&mut rhs);
    Ok(rhs)
}

/// `‖(g + Jᵀλ, c)‖₂`.
pub fn kkt_norm(g: &[f64], j: &Matrix, lambda: &[f64], c: &[f64]) -> f64 {
    let mut lg = if j.rows() == 0 { vec![0.0; g.len()] } else { j.tr_mul_vec(lambda) };
    lg.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    sqrt(dot(&lg, &lg) + dot(c, c))
}
