use alloc::vec;

use super::{solve_program, ConvexProgram, ProgramStatus, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::counters::Counters;
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::math::all_finite;

/// Violation of the first-order conditions of `min f s.t. c_E = 0, c_I <= 0`:
///
/// `min t` over `(t, λ_E, λ_I >= 0)` such that
/// `‖∇f + J_Eᵀλ_E + J_Iᵀλ_I‖∞ <= t` and `‖λ_I ⊙ c_I‖∞ <= t`.
///
/// Feasibility of `x` itself is not part of the measure.
pub fn kkt_residual(
    grad_f: &[f64],
    c_in: &[f64],
    j_eq: &Matrix,
    j_in: &Matrix,
    counters: &mut Counters,
) -> Result<f64> {
    if !all_finite(grad_f) || !all_finite(c_in) || !j_eq.is_finite() || !j_in.is_finite() {
        return Err(Error::numerical("KKT residual inputs"));
    }
    let n = grad_f.len();
    let (me, mi) = (j_eq.rows(), j_in.rows());
    // variables: [t, λ_E, λ_I]
    let nv = 1 + me + mi;
    let mut g = vec![0.0; nv];
    g[0] = 1.0;
    let mut prog = ConvexProgram::lp(g);
    let rows = 2 * n + 2 * mi;
    let mut a = Matrix::zeros(rows, nv);
    let mut b = vec![0.0; rows];
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let r = if sign > 0.0 { 2 * i } else { 2 * i + 1 };
            a[(r, 0)] = -1.0;
            for j in 0..me {
                a[(r, 1 + j)] = sign * j_eq[(j, i)];
            }
            for j in 0..mi {
                a[(r, 1 + me + j)] = sign * j_in[(j, i)];
            }
            b[r] = -sign * grad_f[i];
        }
    }
    for j in 0..mi {
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            let r = 2 * n + 2 * j + k;
            a[(r, 0)] = -1.0;
            a[(r, 1 + me + j)] = sign * c_in[j];
        }
    }
    prog.a_in = a;
    prog.b_in = b;
    prog.lower[0] = 0.0;
    for j in 0..mi {
        prog.lower[1 + me + j] = 0.0;
    }
    let sol = solve_program(&prog, DEFAULT_TOL, DEFAULT_MAX_ITER, counters)?;
    if sol.status == ProgramStatus::Infeasible {
        return Err(Error::numerical("KKT residual LP reported infeasible"));
    }
    Ok(sol.x[0].max(0.0))
}
