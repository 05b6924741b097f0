use alloc::vec;
use alloc::vec::Vec;

use crate::counters::Counters;
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::linalg::HessianModel;
use super::equality::StepAudit;
use crate::math::{dot, norm1, norm2, norm_inf};
use crate::problem::{eval_objective, ConstraintEval, Problem, SampleSet};
use crate::qp::{solve_program, ConvexProgram, ProgramStatus, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Norm used to measure constraint violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    Linf,
    L1,
}

impl NormMode {
    /// `‖(c_E, [c_I]_+)‖` in this norm.
    pub fn violation(self, c_eq: &[f64], c_in: &[f64]) -> f64 {
        let pos = c_in.iter().map(|&v| v.max(0.0));
        match self {
            NormMode::Linf => pos.fold(norm_inf(c_eq), f64::max),
            NormMode::L1 => norm1(c_eq) + pos.sum::<f64>(),
        }
    }

    fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormMode::Linf => norm_inf(v),
            NormMode::L1 => norm1(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustParams {
    pub eps_sigma: f64,
    pub eps_tau: f64,
    pub eta: f64,
    pub eps_alpha: f64,
    pub alpha_min: f64,
    /// Infeasible-stationary thresholds on `‖p‖` and the violation.
    pub tol_p: f64,
    pub tol_v: f64,
}

impl Default for RobustParams {
    fn default() -> Self {
        Self { eps_sigma: 0.5, eps_tau: 0.01, eta: 1e-4, eps_alpha: 0.5, alpha_min: 1e-12, tol_p: 1e-9, tol_v: 1e-8 }
    }
}

/// `σ_p` proportional to the violation and clipped to a norm-dependent
/// range; `σ_d = 2σ_p`.
pub fn sigma_bounds(violation_inf: f64, violation_l1: f64, mode: NormMode, n: usize) -> (f64, f64) {
    let sigma_p = match mode {
        NormMode::Linf => (10.0 * violation_inf).clamp(1e2, 1e4),
        NormMode::L1 => {
            let nf = n as f64;
            (10.0 * violation_l1).clamp(nf * 1e2, nf * 1e4)
        }
    };
    (sigma_p, 2.0 * sigma_p)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Relaxation {
    Linf(f64),
    L1 { y_eq: Vec<f64>, y_in: Vec<f64> },
}

impl Relaxation {
    pub fn total(&self) -> f64 {
        match self {
            Relaxation::Linf(y) => *y,
            Relaxation::L1 { y_eq, y_in } => y_eq.iter().sum::<f64>() + y_in.iter().sum::<f64>(),
        }
    }

    fn eq_bound(&self, i: usize) -> f64 {
        match self {
            Relaxation::Linf(y) => *y,
            Relaxation::L1 { y_eq, .. } => y_eq[i],
        }
    }

    fn in_bound(&self, i: usize) -> f64 {
        match self {
            Relaxation::Linf(y) => *y,
            Relaxation::L1 { y_in, .. } => y_in[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub p: Vec<f64>,
    pub relaxation: Relaxation,
    pub lp_objective: f64,
    pub iterations: usize,
}

/// Tightest relaxation achievable with step `p`.
fn relaxation_at(p: &[f64], c_eq: &[f64], c_in: &[f64], j_eq: &Matrix, j_in: &Matrix, mode: NormMode) -> Relaxation {
    let mut le = c_eq.to_vec();
    if j_eq.rows() > 0 {
        le.iter_mut().zip(j_eq.mul_vec(p)).for_each(|(a, b)| *a += b);
    }
    let mut li = c_in.to_vec();
    if j_in.rows() > 0 {
        li.iter_mut().zip(j_in.mul_vec(p)).for_each(|(a, b)| *a += b);
    }
    match mode {
        NormMode::Linf => Relaxation::Linf(mode.violation(&le, &li)),
        NormMode::L1 => Relaxation::L1 {
            y_eq: le.iter().map(|v| v.abs()).collect(),
            y_in: li.iter().map(|v| v.max(0.0)).collect(),
        },
    }
}

/// Adds the rows `±(J_E z) <= y_E ∓ c_E` and `J_I z <= y_I - c_I` on the
/// first `n` variables, with `y` either a fixed bound or an LP variable.
fn push_linearized_rows(
    rows: &mut Vec<Vec<f64>>,
    rhs: &mut Vec<f64>,
    nv: usize,
    c_eq: &[f64],
    c_in: &[f64],
    j_eq: &Matrix,
    j_in: &Matrix,
    y_col_eq: impl Fn(usize) -> Option<usize>,
    y_col_in: impl Fn(usize) -> Option<usize>,
    y_fixed_eq: impl Fn(usize) -> f64,
    y_fixed_in: impl Fn(usize) -> f64,
) {
    for i in 0..c_eq.len() {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; nv];
            for (k, v) in j_eq.row(i).iter().enumerate() {
                row[k] = sign * v;
            }
            let mut b = -sign * c_eq[i];
            match y_col_eq(i) {
                Some(col) => row[col] = -1.0,
                None => b += y_fixed_eq(i),
            }
            rows.push(row);
            rhs.push(b);
        }
    }
    for i in 0..c_in.len() {
        let mut row = vec![0.0; nv];
        row[..j_in.cols()].copy_from_slice(j_in.row(i));
        let mut b = -c_in[i];
        match y_col_in(i) {
            Some(col) => row[col] = -1.0,
            None => b += y_fixed_in(i),
        }
        rows.push(row);
        rhs.push(b);
    }
}

/// Rows `z - u <= 0`, `-z - u <= 0`, `Σu <= σ` for an `ℓ1` ball on the
/// first `n` variables with auxiliaries starting at column `u0`.
fn push_l1_ball(rows: &mut Vec<Vec<f64>>, rhs: &mut Vec<f64>, nv: usize, n: usize, u0: usize, sigma: f64) {
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; nv];
            row[i] = sign;
            row[u0 + i] = -1.0;
            rows.push(row);
            rhs.push(0.0);
        }
    }
    let mut row = vec![0.0; nv];
    row[u0..u0 + n].iter_mut().for_each(|v| *v = 1.0);
    rows.push(row);
    rhs.push(sigma);
}

fn finish(prog: &mut ConvexProgram, rows: Vec<Vec<f64>>, rhs: Vec<f64>) {
    prog.a_in = Matrix::from_rows(&rows);
    if rows.is_empty() {
        prog.a_in = Matrix::zeros(0, prog.dim());
    }
    prog.b_in = rhs;
}

/// Linearized-violation LP over `‖p‖ <= σ_p` in the mode's norm.
///
/// When `p = 0` is optimal it is returned, so a zero step identifies a
/// stationary point of the violation. The relaxation is recomputed from
/// the returned `p`.
pub fn feasibility_step(
    c_eq: &[f64],
    c_in: &[f64],
    j_eq: &Matrix,
    j_in: &Matrix,
    sigma_p: f64,
    mode: NormMode,
    counters: &mut Counters,
) -> Result<FeasibilityResult> {
    if !(sigma_p > 0.0) {
        return Err(Error::Contract("σ_p must be positive"));
    }
    let n = j_eq.cols().max(j_in.cols());
    let (me, mi) = (c_eq.len(), c_in.len());
    let violation = mode.violation(c_eq, c_in);
    if violation == 0.0 {
        return Ok(FeasibilityResult {
            p: vec![0.0; n],
            relaxation: relaxation_at(&vec![0.0; n], c_eq, c_in, j_eq, j_in, mode),
            lp_objective: 0.0,
            iterations: 0,
        });
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut prog = match mode {
        NormMode::Linf => {
            // [p, y]
            let nv = n + 1;
            let mut g = vec![0.0; nv];
            g[n] = 1.0;
            let mut prog = ConvexProgram::lp(g);
            push_linearized_rows(&mut rows, &mut rhs, nv, c_eq, c_in, j_eq, j_in, |_| Some(n), |_| Some(n), |_| 0.0, |_| 0.0);
            for i in 0..n {
                prog.lower[i] = -sigma_p;
                prog.upper[i] = sigma_p;
            }
            prog.lower[n] = 0.0;
            prog
        }
        NormMode::L1 => {
            // [p, u, y_E, y_I]
            let nv = 2 * n + me + mi;
            let mut g = vec![0.0; nv];
            g[2 * n..].iter_mut().for_each(|v| *v = 1.0);
            let mut prog = ConvexProgram::lp(g);
            push_linearized_rows(
                &mut rows,
                &mut rhs,
                nv,
                c_eq,
                c_in,
                j_eq,
                j_in,
                |i| Some(2 * n + i),
                |i| Some(2 * n + me + i),
                |_| 0.0,
                |_| 0.0,
            );
            push_l1_ball(&mut rows, &mut rhs, nv, n, n, sigma_p);
            for v in prog.lower[n..].iter_mut() {
                *v = 0.0;
            }
            prog
        }
    };
    finish(&mut prog, rows, rhs);
    let sol = solve_program(&prog, DEFAULT_TOL, DEFAULT_MAX_ITER, counters)?;
    if sol.status == ProgramStatus::Infeasible {
        return Err(Error::numerical("feasibility LP reported infeasible"));
    }
    let p = sol.x[..n].to_vec();
    let relaxation = relaxation_at(&p, c_eq, c_in, j_eq, j_in, mode);
    let lp_objective = relaxation.total();
    // prefer the zero step whenever it is optimal up to solver accuracy
    if lp_objective >= violation - 1e-9 * (1.0 + violation) {
        return Ok(FeasibilityResult {
            p: vec![0.0; n],
            relaxation: relaxation_at(&vec![0.0; n], c_eq, c_in, j_eq, j_in, mode),
            lp_objective: violation,
            iterations: sol.iterations,
        });
    }
    Ok(FeasibilityResult { p, relaxation, lp_objective, iterations: sol.iterations })
}

/// `‖p‖ <= tol_p` while the violation exceeds `tol_v`.
pub fn detect_infeasible_stationary(feas: &FeasibilityResult, violation: f64, tol_p: f64, tol_v: f64) -> bool {
    norm2(&feas.p) <= tol_p && violation > tol_v
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustStepResult {
    pub d: Vec<f64>,
    pub delta_c: f64,
    pub qp_objective: f64,
    pub iterations: usize,
}

/// Direction QP: `min gᵀd + ½dᵀHd` subject to the linearized constraints
/// relaxed by the feasibility LP, within `‖d‖ <= σ_d`.
#[allow(clippy::too_many_arguments)]
pub fn direction_step(
    g: &[f64],
    h: &HessianModel,
    c_eq: &[f64],
    c_in: &[f64],
    j_eq: &Matrix,
    j_in: &Matrix,
    feas: &FeasibilityResult,
    sigma_d: f64,
    mode: NormMode,
    counters: &mut Counters,
) -> Result<RobustStepResult> {
    let n = g.len();
    let violation = mode.violation(c_eq, c_in);
    let delta_c = (violation - feas.lp_objective).max(0.0);
    // sliver of interior between opposite rows
    let slack = 1e-10 * (1.0 + violation);
    let relax = &feas.relaxation;
    let hd = h.dense();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut prog = match mode {
        NormMode::Linf => {
            let mut prog = ConvexProgram::lp(g.to_vec());
            prog.h = hd;
            push_linearized_rows(
                &mut rows,
                &mut rhs,
                n,
                c_eq,
                c_in,
                j_eq,
                j_in,
                |_| None,
                |_| None,
                |i| relax.eq_bound(i) + slack,
                |i| relax.in_bound(i) + slack,
            );
            for i in 0..n {
                prog.lower[i] = -sigma_d;
                prog.upper[i] = sigma_d;
            }
            prog
        }
        NormMode::L1 => {
            let nv = 2 * n;
            let mut gg = vec![0.0; nv];
            gg[..n].copy_from_slice(g);
            let mut prog = ConvexProgram::lp(gg);
            let mut hh = Matrix::zeros(nv, nv);
            for i in 0..n {
                hh.row_mut(i)[..n].copy_from_slice(hd.row(i));
            }
            prog.h = hh;
            push_linearized_rows(
                &mut rows,
                &mut rhs,
                nv,
                c_eq,
                c_in,
                j_eq,
                j_in,
                |_| None,
                |_| None,
                |i| relax.eq_bound(i) + slack,
                |i| relax.in_bound(i) + slack,
            );
            push_l1_ball(&mut rows, &mut rhs, nv, n, n, sigma_d);
            prog
        }
    };
    finish(&mut prog, rows, rhs);
    let sol = solve_program(&prog, DEFAULT_TOL, DEFAULT_MAX_ITER, counters)?;
    if sol.status == ProgramStatus::Infeasible {
        return Err(Error::numerical("direction QP reported infeasible"));
    }
    let d = sol.x[..n].to_vec();
    let qp_objective = dot(g, &d) + 0.5 * h.quad(&d);
    Ok(RobustStepResult { d, delta_c, qp_objective, iterations: sol.iterations })
}

pub fn trial_tau_ineq(gtd: f64, dhd: f64, delta_c: f64, eps_sigma: f64) -> f64 {
    let den = gtd + dhd;
    if den <= 1e-14 * (gtd.abs() + dhd.abs()) {
        return f64::INFINITY;
    }
    (1.0 - eps_sigma) * delta_c / den
}

/// Minimum merit parameter before the inner loop is abandoned.
pub const TAU_FLOOR: f64 = 1e-12;

pub fn update_tau_ineq(tau_prev: f64, tau_trial: f64, eps_tau: f64) -> Result<f64> {
    if tau_prev <= tau_trial {
        return Ok(tau_prev);
    }
    let tau = ((1.0 - eps_tau) * tau_prev).min(tau_trial);
    if tau < TAU_FLOOR {
        Err(Error::MeritCollapse { tau })
    } else {
        Ok(tau)
    }
}

/// Sufficient-decrease backtracking `φ(x + αd) <= φ(x) - ηαΔl` for the
/// robust merit function `τF_S + ‖(c_E, [c_I]_+)‖`. `merit(α)` evaluates
/// `φ` at `x + αd`.
pub fn merit_and_linesearch_ineq(
    merit: impl FnMut(f64) -> Result<f64>,
    phi0: f64,
    dl: f64,
    params: &RobustParams,
) -> Result<f64> {
    super::equality::armijo_backtrack(merit, phi0, dl, params.eta, params.eps_alpha, params.alpha_min)
}

/// `‖d‖` in the mode's norm, for checking the σ_d bound.
pub fn step_norm(d: &[f64], mode: NormMode) -> f64 {
    mode.norm(d)
}

/// Data at the current robust inner iterate.
#[derive(Debug, Clone, Copy)]
pub struct RobustContext<'a> {
    pub x: &'a [f64],
    pub g: &'a [f64],
    pub cons: &'a ConstraintEval,
    pub h: &'a HessianModel,
    pub tau_prev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RobustPrepared {
    /// The violation is stationary for its linearization but positive.
    InfeasibleStationary { violation: f64 },
    Step(RobustStep),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustStep {
    pub feasibility: FeasibilityResult,
    pub direction: RobustStepResult,
    pub violation: f64,
    pub tau: f64,
    pub gtd: f64,
    pub dl: f64,
}

/// Feasibility LP, stationarity detection, direction QP and merit update.
/// The merit parameter is updated even when the caller then stops on the
/// step norm.
pub fn prepare_robust_step(
    ctx: &RobustContext<'_>,
    mode: NormMode,
    params: &RobustParams,
    counters: &mut Counters,
) -> Result<RobustPrepared> {
    let cons = ctx.cons;
    let n = ctx.x.len();
    let (sigma_p, sigma_d) = sigma_bounds(cons.violation_inf(), cons.violation_l1(), mode, n);
    let feas = feasibility_step(&cons.c_eq, &cons.c_in, &cons.j_eq, &cons.j_in, sigma_p, mode, counters)?;
    let violation = mode.violation(&cons.c_eq, &cons.c_in);
    if detect_infeasible_stationary(&feas, violation, params.tol_p, params.tol_v) {
        return Ok(RobustPrepared::InfeasibleStationary { violation });
    }
    let direction = direction_step(ctx.g, ctx.h, &cons.c_eq, &cons.c_in, &cons.j_eq, &cons.j_in, &feas, sigma_d, mode, counters)?;
    let gtd = dot(ctx.g, &direction.d);
    let dhd = ctx.h.quad(&direction.d);
    // gᵀd + dᵀHd within the QP accuracy of zero counts as non-positive
    let noise = DEFAULT_TOL * norm2(ctx.g) * (1.0 + norm2(&direction.d));
    let tau_trial = if gtd + dhd <= noise { f64::INFINITY } else { trial_tau_ineq(gtd, dhd, direction.delta_c, params.eps_sigma) };
    let tau = update_tau_ineq(ctx.tau_prev, tau_trial, params.eps_tau)?;
    let dl = -tau * gtd + direction.delta_c;
    Ok(RobustPrepared::Step(RobustStep { feasibility: feas, direction, violation, tau, gtd, dl }))
}

/// `φ_S(x) = τ F_S(x) + ‖(c_E, [c_I]_+)‖` in the mode's norm.
pub fn merit_ineq<P: Problem + ?Sized>(
    problem: &P,
    x: &[f64],
    set: &SampleSet,
    tau: f64,
    mode: NormMode,
    counters: &mut Counters,
) -> Result<f64> {
    let f = eval_objective(problem, x, set, counters)?;
    let mut c_eq = vec![0.0; problem.num_eq()];
    let mut c_in = vec![0.0; problem.num_ineq()];
    problem.constraints(x, &mut c_eq, &mut c_in);
    Ok(tau * f + mode.violation(&c_eq, &c_in))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustTaken {
    pub x: Vec<f64>,
    pub alpha: f64,
    pub audit: StepAudit,
}

pub fn take_robust_step<P: Problem + ?Sized>(
    problem: &P,
    set: &SampleSet,
    ctx: &RobustContext<'_>,
    f_s: f64,
    step: &RobustStep,
    mode: NormMode,
    params: &RobustParams,
    counters: &mut Counters,
) -> Result<RobustTaken> {
    let phi0 = step.tau * f_s + step.violation;
    let d = &step.direction.d;
    let mut trial = ctx.x.to_vec();
    let mut last = f64::NAN;
    let alpha = merit_and_linesearch_ineq(
        |a| {
            trial.iter_mut().zip(ctx.x.iter().zip(d)).for_each(|(t, (x, d))| *t = x + a * d);
            last = merit_ineq(problem, &trial, set, step.tau, mode, counters)?;
            Ok(last)
        },
        phi0,
        step.dl,
        params,
    )?;
    let x = ctx.x.iter().zip(d).map(|(x, d)| x + alpha * d).collect();
    let audit = StepAudit { tau_prev: ctx.tau_prev, tau: step.tau, dl: step.dl, phi0, phi: last, alpha, eta: params.eta };
    Ok(RobustTaken { x, alpha, audit })
}

#[derive(Debug, Clone, PartialEq)]
pub enum RobustOutcome {
    Updated { step: RobustStep, taken: RobustTaken },
    InfeasibleStationary { violation: f64 },
    TerminationSatisfied { d: Vec<f64> },
}

/// One robust inner iteration. `stop_on(‖d‖)` is the termination probe
/// evaluated after the direction QP and before the line search.
#[allow(clippy::too_many_arguments)]
pub fn robust_inner_iteration<P: Problem + ?Sized>(
    problem: &P,
    set: &SampleSet,
    ctx: &RobustContext<'_>,
    f_s: f64,
    mode: NormMode,
    params: &RobustParams,
    stop_on: impl FnOnce(f64) -> bool,
    counters: &mut Counters,
) -> Result<RobustOutcome> {
    match prepare_robust_step(ctx, mode, params, counters)? {
        RobustPrepared::InfeasibleStationary { violation } => Ok(RobustOutcome::InfeasibleStationary { violation }),
        RobustPrepared::Step(step) => {
            if stop_on(norm2(&step.direction.d)) {
                return Ok(RobustOutcome::TerminationSatisfied { d: step.direction.d });
            }
            let taken = take_robust_step(problem, set, ctx, f_s, &step, mode, params, counters)?;
            Ok(RobustOutcome::Updated { step, taken })
        }
    }
}
