use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::counters::Counters;
use crate::dense::{Cholesky, Matrix};
use crate::error::{Error, Result};
use crate::linalg::least_squares_dual;
use crate::math::norm_inf;
use crate::problem::{draw_samples, eval_constraints, sum_gradients, Problem, SampleSet, SamplingMode};
use crate::qp::kkt_residual;

/// Draws used when a problem has no noiseless gradient.
pub const MONTE_CARLO_SAMPLES: usize = 100_000;

/// How stationarity is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationarityKind {
    /// `‖∇f + Jᵀλ*‖∞` with least-squares multipliers.
    LagrangianGradient,
    /// The LP-based KKT residual for general constraints.
    KktResidual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub violation_inf: f64,
    pub stationarity: f64,
    /// The gradient was a Monte Carlo estimate.
    pub monte_carlo: bool,
}

/// Gradient of the true objective. Work done here is measurement and is
/// never charged to a run's counters.
pub fn true_gradient<P: Problem + ?Sized>(problem: &P, x: &[f64]) -> Result<(Vec<f64>, bool)> {
    if let Some((_, g)) = problem.true_value_grad(x) {
        return Ok((g, false));
    }
    let mut scratch = Counters::default();
    let (set, mc) = match problem.sampling_mode() {
        SamplingMode::FiniteSum { size } => (SampleSet::full(size), false),
        SamplingMode::Expectation => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x6d63);
            (draw_samples(problem, MONTE_CARLO_SAMPLES, &mut rng, None)?, true)
        }
    };
    let (_, mut g) = sum_gradients(problem, x, set.as_slice(), &mut scratch)?;
    let inv = 1.0 / set.len() as f64;
    g.iter_mut().for_each(|v| *v *= inv);
    Ok((g, mc))
}

fn lagrangian_gradient_inf(j: &Matrix, g: &[f64]) -> f64 {
    let lambda = match least_squares_dual(j, g) {
        Ok(l) => l,
        Err(Error::RankDeficient { .. }) => regularized_dual(j, g),
        Err(_) => return f64::NAN,
    };
    let mut lg = g.to_vec();
    if j.rows() > 0 {
        lg.iter_mut().zip(j.tr_mul_vec(&lambda)).for_each(|(a, b)| *a += b);
    }
    norm_inf(&lg)
}

fn regularized_dual(j: &Matrix, g: &[f64]) -> Vec<f64> {
    let mut gram = j.gram_rows();
    let shift = 1e-10 * (1.0 + j.frobenius() * j.frobenius());
    for i in 0..gram.rows() {
        gram[(i, i)] += shift;
    }
    let mut rhs = j.mul_vec(g);
    rhs.iter_mut().for_each(|v| *v = -*v);
    match Cholesky::factor(&gram) {
        Some(ch) => {
            ch.solve_in_place(&mut rhs);
            rhs
        }
        None => alloc::vec![0.0; j.rows()],
    }
}

/// Violation `‖(c_E, [c_I]_+)‖∞` and stationarity of the true problem at `x`.
pub fn metrics_eval<P: Problem + ?Sized>(problem: &P, x: &[f64], kind: StationarityKind) -> Result<Metrics> {
    let cons = eval_constraints(problem, x)?;
    let (g, monte_carlo) = true_gradient(problem, x)?;
    let stationarity = match kind {
        StationarityKind::LagrangianGradient => lagrangian_gradient_inf(&cons.j_eq, &g),
        StationarityKind::KktResidual => kkt_residual(&g, &cons.c_in, &cons.j_eq, &cons.j_in, &mut Counters::default())?,
    };
    Ok(Metrics { violation_inf: cons.violation_inf(), stationarity, monte_carlo })
}
