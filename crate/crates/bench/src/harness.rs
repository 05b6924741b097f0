use std::io::{Read, Write};
use std::sync::Arc;

use rasqp_core::driver::{run, SolveOutcome};
use rasqp_core::problem::{Dataset, Noiseless, SamplingMode};
use rasqp_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::config::{Method, RunConfig};
use crate::error::{BenchError, Result};
use crate::profile::{cost_to_success, CostMetric, ProfileInput};
use crate::registry::{build_problem, solver_rng, DynProblem};
use crate::trace::{trace_rows, TraceRow};

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: RunConfig,
    pub tau_bar: f64,
    /// Solver failures are kept per run rather than aborting a sweep.
    pub outcome: std::result::Result<SolveOutcome, CoreError>,
}

impl RunRecord {
    pub fn trace(&self) -> Vec<TraceRow> {
        match &self.outcome {
            Ok(o) => trace_rows(o, self.tau_bar),
            Err(_) => Vec::new(),
        }
    }

    pub fn summary(&self) -> ResultRow {
        let mut row = ResultRow {
            problem: self.config.problem.name.clone(),
            method: self.config.method.to_string(),
            seed: self.config.seed,
            status: String::new(),
            outer_iterations: 0,
            grad_evals: 0,
            minres_iters: 0,
            barrier_iters: 0,
            init_violation: f64::NAN,
            init_stationarity: f64::NAN,
            final_violation: f64::NAN,
            final_stationarity: f64::NAN,
            grad_evals_1e_1: None,
            grad_evals_1e_2: None,
            grad_evals_1e_3: None,
            grad_evals_1e_4: None,
            solver_iters_1e_1: None,
            solver_iters_1e_2: None,
            solver_iters_1e_3: None,
            solver_iters_1e_4: None,
        };
        match &self.outcome {
            Err(e) => row.status = format!("error: {e}"),
            Ok(o) => {
                let last = o.trace.last().map_or(o.initial, |r| r.metrics);
                row.status = o.status.as_str().to_string();
                row.outer_iterations = o.trace.len();
                row.grad_evals = o.counters.grad_evals;
                row.minres_iters = o.counters.minres_iters;
                row.barrier_iters = o.counters.barrier_iters;
                row.init_violation = o.initial.violation_inf;
                row.init_stationarity = o.initial.stationarity;
                row.final_violation = last.violation_inf;
                row.final_stationarity = last.stationarity;
                let g = |eps| cost_to_success(o, eps, CostMetric::GradEvals);
                let s = |eps| cost_to_success(o, eps, CostMetric::SolverIters);
                (row.grad_evals_1e_1, row.grad_evals_1e_2, row.grad_evals_1e_3, row.grad_evals_1e_4) =
                    (g(1e-1), g(1e-2), g(1e-3), g(1e-4));
                (row.solver_iters_1e_1, row.solver_iters_1e_2, row.solver_iters_1e_3, row.solver_iters_1e_4) =
                    (s(1e-1), s(1e-2), s(1e-3), s(1e-4));
            }
        }
        row
    }
}

/// Builds the problem and runs the configured method. Configuration
/// problems are errors; numerical failures are recorded in the record.
pub fn execute(cfg: &RunConfig, data: Option<Arc<Dataset>>) -> Result<RunRecord> {
    let problem = solver_problem(cfg, build_problem(&cfg.problem, cfg.seed, data)?)?;
    let solver = cfg.solver_config(problem.num_ineq())?;
    let outcome = match run(problem.as_ref(), &solver, &cfg.budget(), &mut solver_rng(cfg.seed)) {
        Err(CoreError::Config(msg)) => return Err(BenchError::Config(msg)),
        Err(CoreError::Contract(msg)) => return Err(BenchError::config(msg)),
        other => other,
    };
    Ok(RunRecord { config: cfg.clone(), tau_bar: solver.tau_bar, outcome })
}

/// `det-sqp` with its own full-batch rule has no finite batch on an
/// expectation problem and runs on the noiseless objective instead.
fn solver_problem(cfg: &RunConfig, problem: DynProblem) -> Result<DynProblem> {
    let expectation = problem.sampling_mode() == SamplingMode::Expectation;
    if cfg.method != Method::DetSqp || cfg.sampling.is_some() || !expectation {
        return Ok(problem);
    }
    match Noiseless::new(problem) {
        Some(p) => Ok(Box::new(p)),
        None => Err(BenchError::config(format!("{} has no noiseless objective for det-sqp", cfg.problem.name))),
    }
}

/// One line of the aggregate results file. Cost columns are empty when the
/// run never met the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem: String,
    pub method: String,
    pub seed: u64,
    pub status: String,
    pub outer_iterations: usize,
    pub grad_evals: u64,
    pub minres_iters: u64,
    pub barrier_iters: u64,
    pub init_violation: f64,
    pub init_stationarity: f64,
    pub final_violation: f64,
    pub final_stationarity: f64,
    #[serde(rename = "grad_evals@1e-1")]
    pub grad_evals_1e_1: Option<u64>,
    #[serde(rename = "grad_evals@1e-2")]
    pub grad_evals_1e_2: Option<u64>,
    #[serde(rename = "grad_evals@1e-3")]
    pub grad_evals_1e_3: Option<u64>,
    #[serde(rename = "grad_evals@1e-4")]
    pub grad_evals_1e_4: Option<u64>,
    #[serde(rename = "solver_iters@1e-1")]
    pub solver_iters_1e_1: Option<u64>,
    #[serde(rename = "solver_iters@1e-2")]
    pub solver_iters_1e_2: Option<u64>,
    #[serde(rename = "solver_iters@1e-3")]
    pub solver_iters_1e_3: Option<u64>,
    #[serde(rename = "solver_iters@1e-4")]
    pub solver_iters_1e_4: Option<u64>,
}

impl ResultRow {
    /// Cost column for one of the profile tolerances.
    pub fn cost(&self, eps: f64, metric: CostMetric) -> Option<Option<u64>> {
        let idx = [1e-1, 1e-2, 1e-3, 1e-4].iter().position(|&t| t == eps)?;
        let cols = match metric {
            CostMetric::GradEvals => [self.grad_evals_1e_1, self.grad_evals_1e_2, self.grad_evals_1e_3, self.grad_evals_1e_4],
            CostMetric::SolverIters => {
                [self.solver_iters_1e_1, self.solver_iters_1e_2, self.solver_iters_1e_3, self.solver_iters_1e_4]
            }
        };
        Some(cols[idx])
    }
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(BenchError::from)).collect()
}

pub fn profile_inputs(rows: &[ResultRow], eps: f64, metric: CostMetric) -> Result<Vec<ProfileInput>> {
    rows.iter()
        .map(|r| {
            let cost = r
                .cost(eps, metric)
                .ok_or_else(|| BenchError::config(format!("tolerance {eps:e} is not one of 1e-1, 1e-2, 1e-3, 1e-4")))?;
            Ok(ProfileInput { problem: r.problem.clone(), seed: r.seed, method: r.method.clone(), cost: cost.map(|c| c as f64) })
        })
        .collect()
}
