use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::batch::{adaptive_batch_size, epsilon_schedule, estimate_condition_inputs, geometric_batch_size, termination_check};
use super::metrics::metrics_eval;
use super::{
    AuditEntry, Budget, ConditionEstimate, DualInit, EpsilonSchedule, ExitCause, HessianKind, OuterRecord, SamplingRule,
    SolveOutcome, SolverConfig, SolverKind, Status, TerminationRule,
};
use crate::counters::Counters;
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::linalg::{kkt_norm, least_squares_dual, HessianModel, LbfgsModel};
use crate::math::{dot, norm1, norm2, sqrt};
use crate::problem::{
    draw_samples, eval_constraints, per_sample_gradients, sum_gradients, ConstraintEval, Problem, SampleSet,
};
use crate::sqp::{
    compute_step, model_decrease, prepare_robust_step, prepare_step, take_robust_step, take_step, trial_tau, update_tau,
    Acceptance, EqInnerContext, RobustContext, RobustPrepared,
};

/// Multipliers at the start of an outer iteration. `Reinitialize` keeps the
/// least-squares estimate only when it does not increase `‖T_S‖`.
pub fn dual_initialize(mode: DualInit, lambda_prev: &[f64], g: &[f64], c: &[f64], j: &Matrix) -> Vec<f64> {
    match mode {
        DualInit::CarryOver => lambda_prev.to_vec(),
        DualInit::Reinitialize => match least_squares_dual(j, g) {
            Ok(ls) if kkt_norm(g, j, &ls, c) <= kkt_norm(g, j, lambda_prev, c) => ls,
            _ => lambda_prev.to_vec(),
        },
    }
}

pub fn run<P: Problem + ?Sized, R: RngCore + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    budget: &Budget,
    rng: &mut R,
) -> Result<SolveOutcome> {
    run_with_clock(problem, config, budget, rng, None)
}

struct Cached {
    set: SampleSet,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    variance: Option<f64>,
}

struct Evaluated {
    f: f64,
    g: Vec<f64>,
    variance: Option<f64>,
    fresh: bool,
}

/// `F_S` and `g_S` at `x`, reusing a cached batch on the same set and point,
/// or the sums of an estimation set that forms the prefix of `set`.
fn eval_batch<P: Problem + ?Sized>(
    problem: &P,
    x: &[f64],
    set: &SampleSet,
    prefix: Option<&ConditionEstimate>,
    want_variance: bool,
    cache: &mut Option<Cached>,
    counters: &mut Counters,
) -> Result<Evaluated> {
    if let Some(c) = cache.as_ref() {
        if c.x == x && c.set == *set && (!want_variance || c.variance.is_some()) {
            return Ok(Evaluated { f: c.f, g: c.g.clone(), variance: c.variance, fresh: false });
        }
    }
    let inv = 1.0 / set.len() as f64;
    let (value_sum, mut g, variance) = match prefix {
        Some(est) => {
            let rest = &set.as_slice()[est.fresh.len()..];
            let (v, mut g) = sum_gradients(problem, x, rest, counters)?;
            g.iter_mut().zip(&est.grad_sum).for_each(|(a, b)| *a += b);
            (v + est.value_sum, g, Some(est.variance))
        }
        None if want_variance => {
            let (values, grads) = per_sample_gradients(problem, x, set.as_slice(), counters)?;
            let (mean, var, _) = super::gradient_variance(&grads);
            let g = mean.iter().map(|m| m * set.len() as f64).collect();
            (values.iter().sum(), g, Some(var))
        }
        None => {
            let (v, g) = sum_gradients(problem, x, set.as_slice(), counters)?;
            (v, g, None)
        }
    };
    g.iter_mut().for_each(|v| *v *= inv);
    let f = value_sum * inv;
    *cache = Some(Cached { set: set.clone(), x: x.to_vec(), f, g: g.clone(), variance });
    Ok(Evaluated { f, g, variance, fresh: true })
}

/// `‖d‖`-type and `Δl` rules, checked once the step is known.
fn step_rule_satisfied(rule: &TerminationRule, snapshot: &mut Option<f64>, d_norm: f64, dl: f64) -> bool {
    match *rule {
        TerminationRule::KktError { .. } => false,
        TerminationRule::StepNorm { .. } | TerminationRule::RobustStepNorm { .. } => {
            let s0 = *snapshot.get_or_insert(d_norm);
            termination_check(rule, s0, d_norm)
        }
        TerminationRule::ModelDecrease { kappa_d, .. } => {
            let s0 = *snapshot.get_or_insert(dl.min(kappa_d * d_norm * d_norm));
            termination_check(rule, s0, dl)
        }
    }
}

/// Progress measure `Z` for the batch-size rule on the estimation set.
/// Step-based measures solve one subproblem without updating anything.
#[allow(clippy::too_many_arguments)]
fn probe_z(
    config: &SolverConfig,
    x: &[f64],
    lambda: &[f64],
    h: &HessianModel,
    tau: f64,
    g: &[f64],
    cons: &ConstraintEval,
    counters: &mut Counters,
) -> Result<f64> {
    match config.solver {
        SolverKind::Equality { mode, params } => {
            let ctx = EqInnerContext { x, lambda, g, c: &cons.c_eq, j: &cons.j_eq, h, tau_prev: tau };
            if let TerminationRule::KktError { .. } = config.termination {
                return Ok(kkt_norm(g, &cons.j_eq, lambda, &cons.c_eq));
            }
            let step = compute_step(&ctx, mode, &params, counters)?;
            let d_norm = norm2(&step.d);
            if let TerminationRule::ModelDecrease { .. } = config.termination {
                let gtd = dot(g, &step.d);
                let c_l1 = norm1(&cons.c_eq);
                let r_l1 = step.merit_r_l1();
                let probe_tau = if step.acceptance == Acceptance::InexactCondI {
                    tau
                } else {
                    let trial = trial_tau(gtd, h.quad(&step.d), d_norm * d_norm, c_l1, r_l1, params.eps_sigma, params.eps_d);
                    update_tau(tau, trial, params.eps_tau).unwrap_or(tau)
                };
                return Ok(sqrt(model_decrease(probe_tau, gtd, c_l1, r_l1).max(0.0)));
            }
            Ok(d_norm)
        }
        SolverKind::Robust { norm, params } => {
            let ctx = RobustContext { x, g, cons, h, tau_prev: tau };
            match prepare_robust_step(&ctx, norm, &params, counters) {
                Ok(RobustPrepared::Step(step)) => Ok(match config.termination {
                    TerminationRule::ModelDecrease { .. } => sqrt(step.dl.max(0.0)),
                    _ => norm2(&step.direction.d),
                }),
                Ok(RobustPrepared::InfeasibleStationary { .. }) | Err(Error::MeritCollapse { .. }) => Ok(0.0),
                Err(e) => Err(e),
            }
        }
    }
}

fn validate<P: Problem + ?Sized>(problem: &P, config: &SolverConfig) -> Result<()> {
    if let SolverKind::Equality { .. } = config.solver {
        if problem.num_ineq() > 0 {
            return Err(Error::Config("the equality solver needs a problem without inequality constraints".into()));
        }
    }
    if let (SolverKind::Robust { .. }, TerminationRule::KktError { .. }) = (config.solver, config.termination) {
        return Err(Error::Config("the robust solver terminates on the step norm or the model decrease".into()));
    }
    let rule = config.termination;
    if !(0.0..1.0).contains(&rule.gamma()) || !(rule.eps() >= 0.0) {
        return Err(Error::Config(format!("termination rule needs 0 <= γ < 1 and ε >= 0, got {rule:?}")));
    }
    if let TerminationRule::ModelDecrease { kappa_d, .. } = rule {
        if !(kappa_d > 0.0) {
            return Err(Error::Config("κ_d must be positive".into()));
        }
    }
    match config.sampling {
        SamplingRule::AdaptiveNormTest { theta, beta_hat, initial_size } => {
            if !(theta > 0.0) || !(beta_hat > 1.0) || initial_size == 0 {
                return Err(Error::Config("adaptive sampling needs θ > 0, β̂ > 1 and a positive initial size".into()));
            }
        }
        SamplingRule::Geometric { beta, initial_size } => {
            if !(beta > 0.0 && beta < 1.0) || initial_size == 0 {
                return Err(Error::Config("geometric sampling needs 0 < β < 1 and a positive initial size".into()));
            }
        }
        SamplingRule::Fixed { size } => {
            if size == Some(0) || (size.is_none() && problem.sampling_mode().dataset_cap().is_none()) {
                return Err(Error::Config("fixed sampling needs a positive size for expectation problems".into()));
            }
        }
    }
    if config.inner_cap == 0 || !(config.tau_bar > 0.0) {
        return Err(Error::Config("inner cap and τ̄ must be positive".into()));
    }
    if let EpsilonSchedule::Variance { omega } = config.epsilon {
        if !(omega >= 0.0) {
            return Err(Error::Config("ω̃ must be nonnegative".into()));
        }
    }
    Ok(())
}

/// Runs the outer loop until the budget, the stopping metric, or an
/// infeasible stationary point ends it. `clock` returns elapsed seconds and
/// is only consulted when the budget has a wall-clock limit.
pub fn run_with_clock<P: Problem + ?Sized, R: RngCore + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    budget: &Budget,
    rng: &mut R,
    clock: Option<&dyn Fn() -> f64>,
) -> Result<SolveOutcome> {
    validate(problem, config)?;
    let n = problem.dim();
    let mut x = problem.initial_point();
    if x.len() != n {
        return Err(Error::Config(format!("initial point has length {} but the problem has dimension {n}", x.len())));
    }
    let equality = matches!(config.solver, SolverKind::Equality { .. });
    let kind = config.solver.stationarity_kind();
    let initial = metrics_eval(problem, &x, kind)?;
    let cap = problem.sampling_mode().dataset_cap();

    let mut lambda = if equality { vec![0.0; problem.num_eq()] } else { Vec::new() };
    let mut tau = config.tau_bar;
    let mut h = match config.hessian {
        HessianKind::Identity => HessianModel::Identity(n),
        HessianKind::Lbfgs { memory: 0 } => HessianModel::Lbfgs(LbfgsModel::with_default_memory(n)),
        HessianKind::Lbfgs { memory } => HessianModel::Lbfgs(LbfgsModel::new(n, memory)),
    };
    let mut counters = Counters::default();
    let mut cache: Option<Cached> = None;
    let mut trace = Vec::new();
    let mut audit = Vec::new();
    let mut unrecorded = 0u64;
    let mut prev_size = 0usize;

    let out_of_time = || match (budget.wall_clock_secs, clock) {
        (Some(limit), Some(clock)) => clock() >= limit,
        _ => false,
    };
    let affordable = |counters: &Counters, cost: usize| -> bool {
        counters.grad_evals.saturating_add(cost as u64) <= budget.max_grad_evals && !out_of_time()
    };

    let mut k = 0usize;
    let status = 'outer: loop {
        if k >= budget.max_outer || out_of_time() {
            break Status::BudgetExhausted;
        }
        let tau_start = if config.carry_tau && k > 0 { tau } else { config.tau_bar };

        // batch size, with the sampled norm test after the first iteration
        let mut estimate = None;
        let size = match config.sampling {
            SamplingRule::AdaptiveNormTest { theta, beta_hat, .. } if k > 0 => {
                if !affordable(&counters, prev_size) {
                    break Status::BudgetExhausted;
                }
                let before = counters.grad_evals;
                let cons = eval_constraints(problem, &x)?;
                let est = estimate_condition_inputs(problem, &x, prev_size, rng, &mut counters, |gbar, ctr| {
                    probe_z(config, &x, &lambda, &h, tau_start, gbar, &cons, ctr)
                })?;
                unrecorded = counters.grad_evals - before;
                let size = adaptive_batch_size(prev_size, est.variance, est.z, theta, beta_hat, cap);
                estimate = Some(est);
                size
            }
            SamplingRule::AdaptiveNormTest { initial_size, .. } => cap.map_or(initial_size, |c| initial_size.min(c)),
            SamplingRule::Geometric { beta, initial_size } => geometric_batch_size(k, beta, initial_size, cap),
            SamplingRule::Fixed { size } => {
                let s = size.or(cap).unwrap_or(1);
                cap.map_or(s, |c| s.min(c))
            }
        };
        let set = match (&estimate, config.sampling) {
            (Some(est), _) => draw_samples(problem, size, rng, Some(&est.fresh))?,
            (None, SamplingRule::Fixed { .. }) if cap == Some(size) => SampleSet::full(size),
            _ => draw_samples(problem, size, rng, None)?,
        };

        // first batch of the subsampled problem
        let hit = cache.as_ref().is_some_and(|c| c.x == x && c.set == set);
        let first_cost = if hit { 0 } else { set.len() - estimate.as_ref().map_or(0, |e| e.fresh.len()) };
        if !affordable(&counters, first_cost) {
            break Status::BudgetExhausted;
        }
        let want_variance = matches!(config.epsilon, EpsilonSchedule::Variance { .. }) && estimate.is_none();
        let ev = eval_batch(problem, &x, &set, estimate.as_ref(), want_variance, &mut cache, &mut counters)?;
        unrecorded = 0;
        let mut batches = usize::from(ev.fresh);
        let (mut f, mut g) = (ev.f, ev.g);
        let variance = ev.variance.unwrap_or(0.0);
        let epsilon = epsilon_schedule(config.epsilon, config.termination.eps(), variance, set.len());
        let rule = config.termination.with_eps(epsilon);
        tau = tau_start;
        let mut cons = eval_constraints(problem, &x)?;
        if equality {
            lambda = dual_initialize(config.dual_init, &lambda, &g, &cons.c_eq, &cons.j_eq);
        }

        let mut snapshot: Option<f64> = None;
        let mut j = 0usize;
        let cause = loop {
            match config.solver {
                SolverKind::Equality { mode, params } => {
                    let ctx = EqInnerContext { x: &x, lambda: &lambda, g: &g, c: &cons.c_eq, j: &cons.j_eq, h: &h, tau_prev: tau };
                    if let TerminationRule::KktError { .. } = rule {
                        let t = kkt_norm(&g, &cons.j_eq, &lambda, &cons.c_eq);
                        let s0 = *snapshot.get_or_insert(t);
                        if termination_check(&rule, s0, t) {
                            break ExitCause::Satisfied;
                        }
                    }
                    if j >= config.inner_cap {
                        break ExitCause::InnerCap;
                    }
                    let prep = match prepare_step(&ctx, mode, &params, &mut counters) {
                        Ok(p) => p,
                        Err(Error::MeritCollapse { .. }) => break ExitCause::MeritCollapse,
                        Err(e) => return Err(e),
                    };
                    if step_rule_satisfied(&rule, &mut snapshot, norm2(&prep.step.d), prep.dl) {
                        break ExitCause::Satisfied;
                    }
                    if !(prep.dl > 0.0) {
                        break ExitCause::Stalled;
                    }
                    if !affordable(&counters, set.len()) {
                        break ExitCause::Budget;
                    }
                    let taken = match take_step(problem, &set, &ctx, f, &prep, &params, &mut counters) {
                        Ok(t) => t,
                        Err(Error::LineSearchFailure { .. }) => break ExitCause::LineSearchFailure,
                        Err(e) => return Err(e),
                    };
                    if config.record_audit {
                        audit.push(AuditEntry { k, j, step: taken.audit });
                    }
                    let x_old = core::mem::replace(&mut x, taken.x);
                    lambda = taken.lambda;
                    tau = prep.tau;
                    j += 1;
                    let ev = eval_batch(problem, &x, &set, None, false, &mut cache, &mut counters)?;
                    batches += usize::from(ev.fresh);
                    let new_cons = eval_constraints(problem, &x)?;
                    if let HessianModel::Lbfgs(_) = h {
                        let s: Vec<f64> = x.iter().zip(&x_old).map(|(a, b)| a - b).collect();
                        let mut y: Vec<f64> = ev.g.iter().zip(&g).map(|(a, b)| a - b).collect();
                        if !lambda.is_empty() {
                            let jn = new_cons.j_eq.tr_mul_vec(&lambda);
                            let jo = cons.j_eq.tr_mul_vec(&lambda);
                            y.iter_mut().zip(jn.iter().zip(&jo)).for_each(|(y, (a, b))| *y += a - b);
                        }
                        h.update(&s, &y);
                    }
                    (f, g, cons) = (ev.f, ev.g, new_cons);
                }
                SolverKind::Robust { norm, params } => {
                    if j >= config.inner_cap {
                        break ExitCause::InnerCap;
                    }
                    let ctx = RobustContext { x: &x, g: &g, cons: &cons, h: &h, tau_prev: tau };
                    let step = match prepare_robust_step(&ctx, norm, &params, &mut counters) {
                        Ok(RobustPrepared::Step(s)) => s,
                        Ok(RobustPrepared::InfeasibleStationary { .. }) => break ExitCause::InfeasibleStationary,
                        Err(Error::MeritCollapse { .. }) => break ExitCause::MeritCollapse,
                        Err(e) => return Err(e),
                    };
                    if step_rule_satisfied(&rule, &mut snapshot, norm2(&step.direction.d), step.dl) {
                        break ExitCause::Satisfied;
                    }
                    if !(step.dl > 0.0) {
                        break ExitCause::Stalled;
                    }
                    if !affordable(&counters, set.len()) {
                        break ExitCause::Budget;
                    }
                    let taken = match take_robust_step(problem, &set, &ctx, f, &step, norm, &params, &mut counters) {
                        Ok(t) => t,
                        Err(Error::LineSearchFailure { .. }) => break ExitCause::LineSearchFailure,
                        Err(e) => return Err(e),
                    };
                    if config.record_audit {
                        audit.push(AuditEntry { k, j, step: taken.audit });
                    }
                    let x_old = core::mem::replace(&mut x, taken.x);
                    tau = step.tau;
                    j += 1;
                    let ev = eval_batch(problem, &x, &set, None, false, &mut cache, &mut counters)?;
                    batches += usize::from(ev.fresh);
                    if let HessianModel::Lbfgs(_) = h {
                        let s: Vec<f64> = x.iter().zip(&x_old).map(|(a, b)| a - b).collect();
                        let y: Vec<f64> = ev.g.iter().zip(&g).map(|(a, b)| a - b).collect();
                        h.update(&s, &y);
                    }
                    (f, g) = (ev.f, ev.g);
                    cons = eval_constraints(problem, &x)?;
                }
            }
        };

        let metrics = metrics_eval(problem, &x, kind)?;
        trace.push(OuterRecord {
            k,
            batch_size: set.len(),
            inner_iterations: j,
            gradient_batches: batches,
            counters,
            epsilon,
            variance_estimate: estimate.as_ref().map(|e| e.variance),
            z_estimate: estimate.as_ref().map(|e| e.z),
            metrics,
            tau_exit: tau,
            cause,
            x: x.clone(),
            lambda: lambda.clone(),
        });
        match cause {
            ExitCause::InfeasibleStationary => break 'outer Status::InfeasibleStationary,
            ExitCause::Budget => break 'outer Status::BudgetExhausted,
            _ => {}
        }
        if let Some(stop) = config.stop {
            if metrics.violation_inf <= stop.violation && metrics.stationarity <= stop.stationarity {
                break Status::Converged;
            }
        }
        if j == 0 && cap == Some(set.len()) {
            // later outer iterations would see the same full dataset
            break if cause == ExitCause::Satisfied { Status::Converged } else { Status::Stalled };
        }
        prev_size = set.len();
        k += 1;
    };

    Ok(SolveOutcome { status, x, lambda, initial, trace, counters, unrecorded_grad_evals: unrecorded, audit })
}
