//! The retrospective-approximation outer loop.

mod batch;
mod metrics;
mod run;

use alloc::vec::Vec;

use crate::counters::Counters;
use crate::sqp::{EqParams, NormMode, RobustParams, SolveMode, StepAudit};

pub use batch::{
    adaptive_batch_size, epsilon_schedule, estimate_condition_inputs, geometric_batch_size, gradient_variance,
    termination_check, ConditionEstimate, EXPECTATION_BATCH_LIMIT,
};
pub use metrics::{metrics_eval, true_gradient, Metrics, StationarityKind, MONTE_CARLO_SAMPLES};
pub use run::{dual_initialize, run, run_with_clock};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    /// Line-search SQP; the problem must have no inequalities.
    Equality { mode: SolveMode, params: EqParams },
    /// Robust SQP for general constraints.
    Robust { norm: NormMode, params: RobustParams },
}

impl SolverKind {
    pub fn stationarity_kind(&self) -> StationarityKind {
        match self {
            SolverKind::Equality { .. } => StationarityKind::LagrangianGradient,
            SolverKind::Robust { .. } => StationarityKind::KktResidual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianKind {
    Identity,
    /// L-BFGS with `memory` pairs; zero picks `min(n, 10)`.
    Lbfgs { memory: usize },
}

/// Inner-loop stopping rule `current <= γ snapshot0 + ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminationRule {
    /// On `‖T_S(x, λ)‖`, checked before the step.
    KktError { gamma: f64, eps: f64 },
    /// On `‖d‖`.
    StepNorm { gamma: f64, eps: f64 },
    /// On `Δl`, with `snapshot0 = min{Δl₀, κ_d ‖d₀‖²}`.
    ModelDecrease { gamma: f64, eps: f64, kappa_d: f64 },
    /// On `‖d‖` of the robust direction.
    RobustStepNorm { gamma: f64, eps: f64 },
}

impl TerminationRule {
    pub fn kkt_error() -> Self {
        TerminationRule::KktError { gamma: 0.5, eps: 1e-6 }
    }

    pub fn step_norm() -> Self {
        TerminationRule::StepNorm { gamma: 0.5, eps: 1e-6 }
    }

    pub fn model_decrease() -> Self {
        TerminationRule::ModelDecrease { gamma: 0.1, eps: 1e-6, kappa_d: 1e8 }
    }

    pub fn robust_step_norm() -> Self {
        TerminationRule::RobustStepNorm { gamma: 0.5, eps: 1e-6 }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            TerminationRule::KktError { gamma, .. }
            | TerminationRule::StepNorm { gamma, .. }
            | TerminationRule::ModelDecrease { gamma, .. }
            | TerminationRule::RobustStepNorm { gamma, .. } => gamma,
        }
    }

    pub fn eps(&self) -> f64 {
        match *self {
            TerminationRule::KktError { eps, .. }
            | TerminationRule::StepNorm { eps, .. }
            | TerminationRule::ModelDecrease { eps, .. }
            | TerminationRule::RobustStepNorm { eps, .. } => eps,
        }
    }

    pub(crate) fn with_eps(self, eps: f64) -> Self {
        match self {
            TerminationRule::KktError { gamma, .. } => TerminationRule::KktError { gamma, eps },
            TerminationRule::StepNorm { gamma, .. } => TerminationRule::StepNorm { gamma, eps },
            TerminationRule::ModelDecrease { gamma, kappa_d, .. } => TerminationRule::ModelDecrease { gamma, eps, kappa_d },
            TerminationRule::RobustStepNorm { gamma, .. } => TerminationRule::RobustStepNorm { gamma, eps },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingRule {
    /// Sampled norm test with growth capped at `β̂` per outer iteration.
    AdaptiveNormTest { theta: f64, beta_hat: f64, initial_size: usize },
    /// `⌈(1-β^k)|𝒮|⌉` for finite sums, `|S_k| / β²` growth for expectations.
    Geometric { beta: f64, initial_size: usize },
    /// Constant size; `None` is the full dataset.
    Fixed { size: Option<usize> },
}

impl SamplingRule {
    pub fn adaptive() -> Self {
        SamplingRule::AdaptiveNormTest { theta: 0.5, beta_hat: 5.0, initial_size: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualInit {
    CarryOver,
    Reinitialize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonSchedule {
    /// The termination rule's own `ε`.
    Fixed,
    /// `ω̃ sqrt(Var / |S_k|)`.
    Variance { omega: f64 },
}

/// Stop once the true-problem metrics reach these levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriterion {
    pub violation: f64,
    pub stationarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub solver: SolverKind,
    pub hessian: HessianKind,
    pub termination: TerminationRule,
    pub sampling: SamplingRule,
    pub dual_init: DualInit,
    pub epsilon: EpsilonSchedule,
    pub inner_cap: usize,
    /// Merit parameter at the start of each outer iteration.
    pub tau_bar: f64,
    /// Keep `τ` across outer iterations instead of resetting to `tau_bar`.
    pub carry_tau: bool,
    pub stop: Option<StopCriterion>,
    /// Keep every accepted line-search step in the outcome.
    pub record_audit: bool,
}

impl SolverConfig {
    pub fn equality(termination: TerminationRule) -> Self {
        Self {
            solver: SolverKind::Equality { mode: SolveMode::exact(), params: EqParams::default() },
            hessian: HessianKind::Identity,
            termination,
            sampling: SamplingRule::adaptive(),
            dual_init: DualInit::Reinitialize,
            epsilon: EpsilonSchedule::Fixed,
            inner_cap: 500,
            tau_bar: 1.0,
            carry_tau: false,
            stop: None,
            record_audit: false,
        }
    }

    pub fn robust(norm: NormMode) -> Self {
        Self {
            solver: SolverKind::Robust { norm, params: RobustParams::default() },
            termination: TerminationRule::robust_step_norm(),
            ..Self::equality(TerminationRule::robust_step_norm())
        }
    }

    /// Full batch, one step per outer iteration, `τ` and duals carried: the
    /// deterministic SQP method with a record after every iteration.
    pub fn deterministic(solver: SolverKind) -> Self {
        let termination = match solver {
            SolverKind::Equality { .. } => TerminationRule::KktError { gamma: 0.0, eps: 0.0 },
            SolverKind::Robust { .. } => TerminationRule::RobustStepNorm { gamma: 0.0, eps: 0.0 },
        };
        Self {
            solver,
            termination,
            sampling: SamplingRule::Fixed { size: None },
            dual_init: DualInit::CarryOver,
            inner_cap: 1,
            carry_tau: true,
            ..Self::equality(termination)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub max_grad_evals: u64,
    pub max_outer: usize,
    pub wall_clock_secs: Option<f64>,
}

impl Budget {
    pub fn grad_evals(max_grad_evals: u64) -> Self {
        Self { max_grad_evals, max_outer: usize::MAX, wall_clock_secs: None }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::grad_evals(1_000_000)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCause {
    Satisfied,
    InnerCap,
    Budget,
    MeritCollapse,
    LineSearchFailure,
    /// No usable step: zero model decrease without the rule being met.
    Stalled,
    InfeasibleStationary,
}

impl ExitCause {
    pub fn as_str(self) -> &'static str {
        match self {
            ExitCause::Satisfied => "satisfied",
            ExitCause::InnerCap => "inner_cap",
            ExitCause::Budget => "budget",
            ExitCause::MeritCollapse => "merit_collapse",
            ExitCause::LineSearchFailure => "line_search_failure",
            ExitCause::Stalled => "stalled",
            ExitCause::InfeasibleStationary => "infeasible_stationary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub k: usize,
    pub batch_size: usize,
    pub inner_iterations: usize,
    /// Gradient batches of `batch_size` evaluated in this iteration,
    /// including the estimation set reused as part of the first batch.
    pub gradient_batches: usize,
    pub counters: Counters,
    pub epsilon: f64,
    /// Sampled gradient variance and progress measure behind the batch
    /// size, when the adaptive rule produced it.
    pub variance_estimate: Option<f64>,
    pub z_estimate: Option<f64>,
    pub metrics: Metrics,
    pub tau_exit: f64,
    pub cause: ExitCause,
    pub x: Vec<f64>,
    /// Equality multipliers at exit; empty for the robust solver.
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    InfeasibleStationary,
    BudgetExhausted,
    /// No progress on the full dataset, so later outer iterations would repeat.
    Stalled,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::InfeasibleStationary => "infeasible_stationary",
            Status::BudgetExhausted => "budget_exhausted",
            Status::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditEntry {
    pub k: usize,
    pub j: usize,
    pub step: StepAudit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: Status,
    pub x: Vec<f64>,
    /// Multipliers of the equality solver; empty for the robust solver.
    pub lambda: Vec<f64>,
    pub initial: Metrics,
    pub trace: Vec<OuterRecord>,
    pub counters: Counters,
    /// Gradient evaluations of an estimation set whose outer iteration never
    /// completed.
    pub unrecorded_grad_evals: u64,
    pub audit: Vec<AuditEntry>,
}
