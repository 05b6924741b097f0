//! Inner solvers: line-search SQP for equality constraints and robust SQP
//! for general constraints.

pub mod equality;
pub mod inequality;

pub use equality::{
    armijo_backtrack, compute_step, inner_iteration, merit_eq, model_decrease, prepare_step, take_step, trial_tau,
    update_tau, Acceptance, EqInnerContext, EqParams, EqPrepared, EqStepResult, EqTaken, SolveMode, StepAudit,
};
pub use inequality::{
    detect_infeasible_stationary, direction_step, feasibility_step, merit_and_linesearch_ineq, merit_ineq,
    prepare_robust_step, robust_inner_iteration, sigma_bounds, take_robust_step, trial_tau_ineq, update_tau_ineq,
    FeasibilityResult, NormMode, Relaxation, RobustContext, RobustOutcome, RobustParams, RobustPrepared, RobustStep,
    RobustStepResult, RobustTaken, TAU_FLOOR,
};
