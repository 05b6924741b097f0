//! Success tests and Dolan-Moré performance profiles.

use std::collections::{BTreeMap, BTreeSet};

use rasqp_core::driver::SolveOutcome;

/// Tolerances used for profiles.
pub const TOLERANCES: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Success {
    pub feasible: bool,
    /// Feasible and stationary.
    pub solved: bool,
}

/// `metric_out <= ε max{1, metric_init}` for violation and stationarity.
/// Metrics are `(violation, stationarity)` pairs.
pub fn success_test(init: (f64, f64), out: (f64, f64), eps: f64) -> Success {
    let feasible = out.0 <= eps * init.0.max(1.0);
    let stationary = out.1 <= eps * init.1.max(1.0);
    Success { feasible, solved: feasible && stationary }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMetric {
    GradEvals,
    /// Cumulative SQP (inner) iterations.
    SolverIters,
}

impl CostMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            CostMetric::GradEvals => "grad_evals",
            CostMetric::SolverIters => "solver_iters",
        }
    }
}

/// Cost at the first outer exit that solves the instance, or `None`.
/// An initial point that already passes costs zero.
pub fn cost_to_success(outcome: &SolveOutcome, eps: f64, metric: CostMetric) -> Option<u64> {
    let init = (outcome.initial.violation_inf, outcome.initial.stationarity);
    if success_test(init, init, eps).solved {
        return Some(0);
    }
    let mut iters = 0u64;
    for r in &outcome.trace {
        iters += r.inner_iterations as u64;
        if success_test(init, (r.metrics.violation_inf, r.metrics.stationarity), eps).solved {
            return Some(match metric {
                CostMetric::GradEvals => r.counters.grad_evals,
                CostMetric::SolverIters => iters,
            });
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileInput {
    pub problem: String,
    pub seed: u64,
    pub method: String,
    /// `None` marks a failure.
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub method: String,
    /// `(τ, ρ(τ))` breakpoints, increasing in τ, starting at τ = 1.
    pub points: Vec<(f64, f64)>,
}

impl ProfileCurve {
    /// `ρ(τ)`: fraction of instances solved within a factor τ of the best.
    pub fn at(&self, tau: f64) -> f64 {
        self.points.iter().take_while(|p| p.0 <= tau).last().map_or(0.0, |p| p.1)
    }
}

/// Instances are `(problem, seed)` pairs. Costs are floored at 1 so that
/// runs solved at the initial point get ratio 1. Failures have ratio ∞ and
/// never count.
pub fn performance_profile(inputs: &[ProfileInput]) -> Vec<ProfileCurve> {
    let mut best: BTreeMap<(&str, u64), f64> = BTreeMap::new();
    for inp in inputs {
        let entry = best.entry((inp.problem.as_str(), inp.seed)).or_insert(f64::INFINITY);
        if let Some(c) = inp.cost {
            *entry = entry.min(c.max(1.0));
        }
    }
    let n_instances = best.len() as f64;
    let methods: BTreeSet<&str> = inputs.iter().map(|i| i.method.as_str()).collect();
    methods
        .into_iter()
        .map(|m| {
            let mut ratios: Vec<f64> = inputs
                .iter()
                .filter(|i| i.method == m)
                .filter_map(|i| i.cost.map(|c| c.max(1.0) / best[&(i.problem.as_str(), i.seed)]))
                .collect();
            ratios.sort_by(f64::total_cmp);
            let mut points: Vec<(f64, f64)> = vec![(1.0, 0.0)];
            for (i, &r) in ratios.iter().enumerate() {
                let frac = (i + 1) as f64 / n_instances;
                match points.last_mut() {
                    Some(last) if last.0 >= r => last.1 = frac,
                    _ => points.push((r, frac)),
                }
            }
            ProfileCurve { method: m.to_string(), points }
        })
        .collect()
}
