use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::{EpsilonSchedule, TerminationRule};
use crate::counters::Counters;
use crate::dense::Matrix;
use crate::error::Result;
use crate::math::{ceil, powi, sqrt};
use crate::problem::{draw_samples, per_sample_gradients, Problem, SampleSet};

/// `current <= γ snapshot0 + ε`
pub fn termination_check(rule: &TerminationRule, snapshot0: f64, current: f64) -> bool {
    current <= rule.gamma() * snapshot0 + rule.eps()
}

/// `min{cap, β̂ prev, max{prev, ⌈Var / (θ̃² Z²)⌉}}`. A zero `Z` with positive
/// variance makes the middle term unbounded.
pub fn adaptive_batch_size(prev_size: usize, variance: f64, z: f64, theta: f64, beta_hat: f64, cap: Option<usize>) -> usize {
    let prev = prev_size.max(1) as f64;
    let candidate = if variance <= 0.0 {
        0.0
    } else if z <= 0.0 {
        f64::INFINITY
    } else {
        ceil(variance / (theta * theta * z * z))
    };
    let mut size = (beta_hat * prev).min(prev.max(candidate));
    if let Some(cap) = cap {
        size = size.min(cap as f64);
    }
    size.max(1.0) as usize
}

/// Largest batch ever requested from an expectation problem.
pub const EXPECTATION_BATCH_LIMIT: usize = 1 << 30;

/// Finite-sum: `⌈(1 - β^k)|𝒮|⌉`. Expectation: `|S_{k+1}| = ⌈|S_k| / β̃²⌉`
/// from `initial_size`. Both are clipped to `[1, cap]`.
pub fn geometric_batch_size(k: usize, beta: f64, initial_size: usize, cap: Option<usize>) -> usize {
    match cap {
        Some(total) => {
            let size = ceil((1.0 - powi(beta, k as i32)) * total as f64);
            (size.max(1.0) as usize).min(total)
        }
        None => {
            let mut size = initial_size.max(1) as f64;
            for _ in 0..k {
                size = ceil(size / (beta * beta));
                if size >= EXPECTATION_BATCH_LIMIT as f64 {
                    return EXPECTATION_BATCH_LIMIT;
                }
            }
            size as usize
        }
    }
}

/// Inner tolerance `ε_k`: the rule's constant, or `ω̃ sqrt(Var / |S_k|)`.
pub fn epsilon_schedule(schedule: EpsilonSchedule, rule_eps: f64, variance: f64, batch_size: usize) -> f64 {
    match schedule {
        EpsilonSchedule::Fixed => rule_eps,
        EpsilonSchedule::Variance { omega } => omega * sqrt(variance.max(0.0) / batch_size.max(1) as f64),
    }
}

/// Mean of the rows and the trace of their sample covariance. A single row
/// has zero variance and is flagged degenerate.
pub fn gradient_variance(grads: &Matrix) -> (Vec<f64>, f64, bool) {
    let (s, n) = (grads.rows(), grads.cols());
    let mut mean = vec![0.0; n];
    if s == 0 {
        return (mean, 0.0, true);
    }
    for i in 0..s {
        mean.iter_mut().zip(grads.row(i)).for_each(|(m, g)| *m += g);
    }
    mean.iter_mut().for_each(|m| *m /= s as f64);
    if s == 1 {
        return (mean, 0.0, true);
    }
    let mut ss = 0.0;
    for i in 0..s {
        ss += grads.row(i).iter().zip(&mean).map(|(g, m)| (g - m) * (g - m)).sum::<f64>();
    }
    (mean, ss / (s - 1) as f64, false)
}

/// Sampled inputs to the batch-size rule, with the fresh set's sums kept so
/// the next batch can reuse them.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionEstimate {
    pub variance: f64,
    pub z: f64,
    pub fresh: SampleSet,
    pub value_sum: f64,
    pub grad_sum: Vec<f64>,
    pub degenerate: bool,
}

/// Draws `S̃` of `prev_size` independently of the past, evaluates per-sample
/// gradients at `x`, and asks `z_of(ḡ)` for the progress measure.
pub fn estimate_condition_inputs<P: Problem + ?Sized, R: RngCore + ?Sized>(
    problem: &P,
    x: &[f64],
    prev_size: usize,
    rng: &mut R,
    counters: &mut Counters,
    z_of: impl FnOnce(&[f64], &mut Counters) -> Result<f64>,
) -> Result<ConditionEstimate> {
    let fresh = draw_samples(problem, prev_size.max(1), rng, None)?;
    let (values, grads) = per_sample_gradients(problem, x, fresh.as_slice(), counters)?;
    let (mean, variance, degenerate) = gradient_variance(&grads);
    let z = z_of(&mean, counters)?;
    let grad_sum = mean.iter().map(|m| m * fresh.len() as f64).collect();
    Ok(ConditionEstimate { variance, z, value_sum: values.iter().sum(), grad_sum, fresh, degenerate })
}
