use alloc::vec;
use alloc::vec::Vec;

use crate::counters::Counters;
use crate::dense::{Cholesky, Matrix};
use crate::error::{Error, Result};
use crate::linalg::{minres_solve, HessianModel, KktOperator, MinresOptions, StopReason, SymmetricOperator};
use crate::math::{dot, norm1, norm2, sqrt};
use crate::problem::{eval_objective, Problem, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqParams {
    pub eps_sigma: f64,
    pub eps_tau: f64,
    pub eps_d: f64,
    pub eta: f64,
    pub eps_alpha: f64,
    pub alpha_min: f64,
}

impl Default for EqParams {
    fn default() -> Self {
        Self { eps_sigma: 0.5, eps_tau: 0.01, eps_d: 0.5, eta: 1e-4, eps_alpha: 0.5, alpha_min: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    /// MINRES to relative residual `tol`.
    Exact { tol: f64 },
    /// First MINRES iterate passing inexactness condition I or II; `tol`
    /// is the exact-mode fallback.
    Inexact { kappa_t: f64, kappa_prime: f64, eps_feas: f64, eps_opt: f64, tol: f64 },
}

impl SolveMode {
    pub fn exact() -> Self {
        SolveMode::Exact { tol: 1e-6 }
    }

    pub fn inexact() -> Self {
        SolveMode::Inexact { kappa_t: 0.1, kappa_prime: 1e3, eps_feas: 1e-4, eps_opt: 1e-4, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acceptance {
    Exact,
    InexactCondI,
    InexactCondII,
}

/// Data at the current inner iterate.
#[derive(Debug, Clone, Copy)]
pub struct EqInnerContext<'a> {
    pub x: &'a [f64],
    pub lambda: &'a [f64],
    pub g: &'a [f64],
    pub c: &'a [f64],
    pub j: &'a Matrix,
    pub h: &'a HessianModel,
    pub tau_prev: f64,
}

impl EqInnerContext<'_> {
    /// `T_S(x, λ) = (g + Jᵀλ, c)`
    pub fn kkt_vector(&self) -> Vec<f64> {
        let n = self.g.len();
        let mut t = Vec::with_capacity(n + self.c.len());
        t.extend_from_slice(self.g);
        if self.j.rows() > 0 {
            let jt = self.j.tr_mul_vec(self.lambda);
            t.iter_mut().zip(&jt).for_each(|(a, b)| *a += b);
        }
        t.extend_from_slice(self.c);
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqStepResult {
    pub d: Vec<f64>,
    pub delta: Vec<f64>,
    pub rho: Vec<f64>,
    pub r: Vec<f64>,
    pub acceptance: Acceptance,
    pub minres_iters: usize,
}

impl EqStepResult {
    /// `‖r‖₁` as used by the merit model. Exact solves count as `r = 0`.
    pub fn merit_r_l1(&self) -> f64 {
        match self.acceptance {
            Acceptance::Exact => 0.0,
            _ => norm1(&self.r),
        }
    }
}

/// Solves `[[H, Jᵀ], [J, 0]] (d, δ) = -T_S` by MINRES, exactly or up to the
/// inexactness conditions. Residuals are `(ρ, r) = K(d, δ) + T_S`.
pub fn compute_step(
    ctx: &EqInnerContext<'_>,
    mode: SolveMode,
    params: &EqParams,
    counters: &mut Counters,
) -> Result<EqStepResult> {
    let n = ctx.g.len();
    let m = ctx.c.len();
    let t = ctx.kkt_vector();
    let b: Vec<f64> = t.iter().map(|v| -v).collect();
    let op = KktOperator { h: ctx.h, j: ctx.j };
    let max_iter = 5 * (n + m) + 50;
    let c_l1 = norm1(ctx.c);
    let c_l2 = norm2(ctx.c);
    let t_norm = norm2(&t);
    let j_norm = ctx.j.frobenius();
    let g_norm = norm2(ctx.g);

    let split = |z: &[f64]| (z[..n].to_vec(), z[n..].to_vec());
    let (report, acceptance) = match mode {
        SolveMode::Exact { tol } => {
            let rep = minres_solve(&op, &b, MinresOptions { tol, max_iter }, None, counters)?;
            (rep, Acceptance::Exact)
        }
        SolveMode::Inexact { kappa_t, kappa_prime, eps_feas, eps_opt, tol } => {
            let mut which = Acceptance::Exact;
            let mut accept = |z: &[f64], res: &[f64]| {
                let (d, rho, r) = (&z[..n], &res[..n], &res[n..]);
                let rho_norm = norm2(rho);
                let r_norm = norm2(r);
                let res_norm = sqrt(rho_norm * rho_norm + r_norm * r_norm);
                let d_norm = norm2(d);
                let dhd = ctx.h.quad(d);
                let gtd = dot(ctx.g, d);
                let r_l1 = norm1(r);
                let dl = model_decrease(ctx.tau_prev, gtd, c_l1, r_l1);
                let scale = params.eps_sigma * (1.0 - eps_feas);
                let cond1 = dl >= scale * c_l1.max(r_l1 - c_l1)
                    + scale * ctx.tau_prev * dhd.max(params.eps_d * d_norm * d_norm)
                    && res_norm <= kappa_t * t_norm.min(d_norm)
                    && rho_norm <= kappa_prime * j_norm.max(g_norm);
                if cond1 {
                    which = Acceptance::InexactCondI;
                    return true;
                }
                let cond2 = r_norm <= eps_feas * c_l2 && rho_norm <= eps_opt * c_l2;
                if cond2 {
                    which = Acceptance::InexactCondII;
                    return true;
                }
                false
            };
            let rep = minres_solve(&op, &b, MinresOptions { tol, max_iter }, Some(&mut accept), counters)?;
            let acc = match rep.stop_reason {
                StopReason::InexactnessAccepted => which,
                _ => Acceptance::Exact,
            };
            (rep, acc)
        }
    };
    let (solution, residual, acceptance) =
        if report.stop_reason == StopReason::MaxIter && report.residual_norm > 1e-3 * t_norm.max(f64::MIN_POSITIVE) {
            let z = dense_kkt_solve(ctx.h, ctx.j, &b)
                .ok_or_else(|| Error::numerical("KKT system solve did not converge"))?;
            let mut res = vec![0.0; n + m];
            op.apply(&z, &mut res);
            res.iter_mut().zip(&b).for_each(|(a, bi)| *a -= bi);
            (z, res, Acceptance::Exact)
        } else {
            (report.solution, report.residual, acceptance)
        };
    let (d, delta) = split(&solution);
    let (rho, r) = split(&residual);
    Ok(EqStepResult { d, delta, rho, r, acceptance, minres_iters: report.iterations })
}

/// Range-space solve of `[[H, Jᵀ], [J, 0]] z = b` through Cholesky factors of
/// `H` and `J H⁻¹ Jᵀ`. `None` when either factor breaks down.
fn dense_kkt_solve(h: &HessianModel, j: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = h.dim();
    let m = j.rows();
    let hc = Cholesky::factor(&h.dense())?;
    let (b1, b2) = b.split_at(n);
    let hinv_b1 = hc.solve(b1);
    let hinv_jt: Vec<Vec<f64>> = (0..m).map(|i| hc.solve(j.row(i))).collect();
    let mut schur = Matrix::zeros(m, m);
    for a in 0..m {
        for c in 0..m {
            schur[(a, c)] = dot(j.row(a), &hinv_jt[c]);
        }
    }
    let rhs: Vec<f64> = (0..m).map(|a| dot(j.row(a), &hinv_b1) - b2[a]).collect();
    let delta = Cholesky::factor(&schur)?.solve(&rhs);
    let mut z = hinv_b1;
    for (c, col) in hinv_jt.iter().enumerate() {
        z.iter_mut().zip(col).for_each(|(zi, v)| *zi -= delta[c] * v);
    }
    z.extend_from_slice(&delta);
    z.iter().all(|v| v.is_finite()).then_some(z)
}

/// Trial merit parameter. Returns `f64::INFINITY` when the step is already a
/// descent direction for the objective model.
pub fn trial_tau(gtd: f64, dhd: f64, d_norm_sq: f64, c_l1: f64, r_l1: f64, eps_sigma: f64, eps_d: f64) -> f64 {
    let curv = dhd.max(eps_d * d_norm_sq);
    let den = gtd + curv;
    // round-off guard: a denominator that is zero up to cancellation
    if den <= 1e-14 * (gtd.abs() + curv) {
        return f64::INFINITY;
    }
    (1.0 - eps_sigma) * (c_l1 - r_l1) / den
}

pub fn update_tau(tau_prev: f64, tau_trial: f64, eps_tau: f64) -> Result<f64> {
    if tau_prev <= tau_trial {
        return Ok(tau_prev);
    }
    let tau = (1.0 - eps_tau) * tau_trial;
    if tau > 0.0 {
        Ok(tau)
    } else {
        Err(Error::MeritCollapse { tau: tau_trial })
    }
}

/// `Δl = -τ gᵀd + ‖c‖₁ - ‖r‖₁`
pub fn model_decrease(tau: f64, gtd: f64, c_l1: f64, r_l1: f64) -> f64 {
    -tau * gtd + c_l1 - r_l1
}

/// Backtracks `α ∈ {1, ε_α, ε_α², ...}` until
/// `φ(α) <= φ₀ - η α Δl`. `merit(α)` evaluates `φ` at `x + αd`.
pub fn armijo_backtrack(
    mut merit: impl FnMut(f64) -> Result<f64>,
    phi0: f64,
    dl: f64,
    eta: f64,
    eps_alpha: f64,
    alpha_min: f64,
) -> Result<f64> {
    if !(dl > 0.0) {
        return Err(Error::Contract("line search needs a positive model decrease"));
    }
    let mut alpha = 1.0;
    while alpha >= alpha_min {
        let phi = merit(alpha)?;
        if phi <= phi0 - eta * alpha * dl {
            return Ok(alpha);
        }
        alpha *= eps_alpha;
    }
    Err(Error::LineSearchFailure { alpha_min })
}

/// `H d` for the model, used by residual checks.
pub fn hessian_times(h: &HessianModel, d: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; d.len()];
    crate::linalg::SymmetricOperator::apply(h, d, &mut out);
    out
}

/// Step data computed before the termination check and the line search.
#[derive(Debug, Clone, PartialEq)]
pub struct EqPrepared {
    pub step: EqStepResult,
    pub tau: f64,
    pub gtd: f64,
    pub c_l1: f64,
    pub dl: f64,
}

/// Step, merit parameter and model decrease at the current iterate. `τ` is
/// left at `τ_prev` when condition I accepted the step.
pub fn prepare_step(
    ctx: &EqInnerContext<'_>,
    mode: SolveMode,
    params: &EqParams,
    counters: &mut Counters,
) -> Result<EqPrepared> {
    let step = compute_step(ctx, mode, params, counters)?;
    let gtd = dot(ctx.g, &step.d);
    let dhd = ctx.h.quad(&step.d);
    let c_l1 = norm1(ctx.c);
    let r_l1 = step.merit_r_l1();
    let tau = if step.acceptance == Acceptance::InexactCondI {
        ctx.tau_prev
    } else {
        let d_sq = dot(&step.d, &step.d);
        update_tau(ctx.tau_prev, trial_tau(gtd, dhd, d_sq, c_l1, r_l1, params.eps_sigma, params.eps_d), params.eps_tau)?
    };
    let dl = model_decrease(tau, gtd, c_l1, r_l1);
    Ok(EqPrepared { step, tau, gtd, c_l1, dl })
}

/// One accepted line-search step, kept for post-hoc checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAudit {
    pub tau_prev: f64,
    pub tau: f64,
    pub dl: f64,
    pub phi0: f64,
    pub phi: f64,
    pub alpha: f64,
    pub eta: f64,
}

impl StepAudit {
    pub fn sufficient_decrease(&self) -> bool {
        self.phi <= self.phi0 - self.eta * self.alpha * self.dl
    }
}

/// `φ_S(x) = τ F_S(x) + ‖c(x)‖₁`.
pub fn merit_eq<P: Problem + ?Sized>(
    problem: &P,
    x: &[f64],
    set: &SampleSet,
    tau: f64,
    counters: &mut Counters,
) -> Result<f64> {
    let f = eval_objective(problem, x, set, counters)?;
    let mut c_eq = vec![0.0; problem.num_eq()];
    let mut c_in = vec![0.0; problem.num_ineq()];
    problem.constraints(x, &mut c_eq, &mut c_in);
    Ok(tau * f + norm1(&c_eq))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqTaken {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub alpha: f64,
    pub audit: StepAudit,
}

/// Line search on `φ_S` along `(d, δ)` and the primal-dual update.
pub fn take_step<P: Problem + ?Sized>(
    problem: &P,
    set: &SampleSet,
    ctx: &EqInnerContext<'_>,
    f_s: f64,
    prep: &EqPrepared,
    params: &EqParams,
    counters: &mut Counters,
) -> Result<EqTaken> {
    let phi0 = prep.tau * f_s + prep.c_l1;
    let d = &prep.step.d;
    let mut trial = ctx.x.to_vec();
    let mut last = f64::NAN;
    let alpha = armijo_backtrack(
        |a| {
            trial.iter_mut().zip(ctx.x.iter().zip(d)).for_each(|(t, (x, d))| *t = x + a * d);
            last = merit_eq(problem, &trial, set, prep.tau, counters)?;
            Ok(last)
        },
        phi0,
        prep.dl,
        params.eta,
        params.eps_alpha,
        params.alpha_min,
    )?;
    let x: Vec<f64> = ctx.x.iter().zip(d).map(|(x, d)| x + alpha * d).collect();
    let lambda = ctx.lambda.iter().zip(&prep.step.delta).map(|(l, dl)| l + alpha * dl).collect();
    let audit = StepAudit { tau_prev: ctx.tau_prev, tau: prep.tau, dl: prep.dl, phi0, phi: last, alpha, eta: params.eta };
    Ok(EqTaken { x, lambda, alpha, audit })
}

/// One full inner iteration on the subsampled problem: step, merit
/// parameter, line search and update. The Hessian model is updated by the
/// caller once the gradient at the new iterate is known.
pub fn inner_iteration<P: Problem + ?Sized>(
    problem: &P,
    set: &SampleSet,
    ctx: &EqInnerContext<'_>,
    f_s: f64,
    mode: SolveMode,
    params: &EqParams,
    counters: &mut Counters,
) -> Result<(EqPrepared, EqTaken)> {
    let prep = prepare_step(ctx, mode, params, counters)?;
    let taken = take_step(problem, set, ctx, f_s, &prep, params, counters)?;
    Ok((prep, taken))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx<'a>(
        g: &'a [f64],
        c: &'a [f64],
        lambda: &'a [f64],
        j: &'a Matrix,
        h: &'a HessianModel,
    ) -> EqInnerContext<'a> {
        EqInnerContext { x: g, lambda, g, c, j, h, tau_prev: 1.0 }
    }

    #[test]
    fn kkt_point_gives_zero_step() {
        let j = Matrix::from_rows(&[[1.0, 0.0]]);
        let h = HessianModel::Identity(2);
        let cx = ctx(&[2.0, 0.0], &[0.0], &[-2.0], &j, &h);
        let s = compute_step(&cx, SolveMode::exact(), &EqParams::default(), &mut Counters::default()).unwrap();
        assert_eq!(s.d, vec![0.0, 0.0]);
        assert_eq!(s.delta, vec![0.0]);
    }

    #[test]
    fn two_by_one_system_by_hand() {
        let j = Matrix::from_rows(&[[1.0, 0.0]]);
        let h = HessianModel::Identity(2);
        let cx = ctx(&[0.0, 1.0], &[0.0], &[0.0], &j, &h);
        let s = compute_step(&cx, SolveMode::exact(), &EqParams::default(), &mut Counters::default()).unwrap();
        assert!(s.d[0].abs() < 1e-12 && (s.d[1] + 1.0).abs() < 1e-12);
        assert!(s.delta[0].abs() < 1e-12);
        assert_eq!(s.acceptance, Acceptance::Exact);
    }

    #[test]
    fn inexact_mode_accepts_and_satisfies_identity() {
        let j = Matrix::from_rows(&[[1.0, 2.0, 0.0], [0.0, 1.0, -1.0]]);
        let h = HessianModel::Identity(3);
        let g = [1.0, -2.0, 0.5];
        let c = [0.3, -0.1];
        let lambda = [0.2, 0.1];
        let cx = ctx(&g, &c, &lambda, &j, &h);
        let s = compute_step(&cx, SolveMode::inexact(), &EqParams::default(), &mut Counters::default()).unwrap();
        // (Hd + Jᵀδ, Jd) = -T + (ρ, r)
        let t = cx.kkt_vector();
        let mut top = hessian_times(&h, &s.d);
        let jt = j.tr_mul_vec(&s.delta);
        top.iter_mut().zip(&jt).for_each(|(a, b)| *a += b);
        let bottom = j.mul_vec(&s.d);
        for i in 0..3 {
            assert!((top[i] + t[i] - s.rho[i]).abs() < 1e-10);
        }
        for i in 0..2 {
            assert!((bottom[i] + t[3 + i] - s.r[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn trial_tau_cases() {
        assert_eq!(trial_tau(-1.0, 0.5, 0.2, 1.0, 0.0, 0.5, 0.5), f64::INFINITY);
        assert_eq!(trial_tau(1.0, 1.0, 0.0, 1.0, 0.0, 0.5, 0.5), 0.25);
        assert_eq!(trial_tau(1.0, 1.0, 0.0, 0.7, 0.7, 0.5, 0.5), 0.0);
    }

    #[test]
    fn update_tau_cases() {
        assert_eq!(update_tau(1.0, f64::INFINITY, 0.1).unwrap(), 1.0);
        assert!((update_tau(1.0, 0.25, 0.1).unwrap() - 0.225).abs() < 1e-15);
        assert_eq!(update_tau(0.2, 0.25, 0.1).unwrap(), 0.2);
        assert!(matches!(update_tau(1.0, 0.0, 0.1), Err(Error::MeritCollapse { .. })));
    }

    #[test]
    fn model_decrease_cases() {
        assert_eq!(model_decrease(0.5, 0.0, 1.5, 0.0), 1.5);
        assert!((model_decrease(0.225, 1.0, 1.0, 0.0) - 0.775).abs() < 1e-15);
        assert!(model_decrease(0.3, -2.0, 0.0, 0.0) > 0.0);
    }

    #[test]
    fn armijo_accepts_full_step_on_linear_merit() {
        let a = armijo_backtrack(|a| Ok(1.0 - 2.0 * a), 1.0, 2.0, 0.5, 0.5, 1e-12).unwrap();
        assert_eq!(a, 1.0);
    }

    #[test]
    fn armijo_halves_overshooting_step() {
        // f = ½x², x = 1, d = -2
        let a = armijo_backtrack(|a| Ok(0.5 * (1.0 - 2.0 * a) * (1.0 - 2.0 * a)), 0.5, 2.0, 0.5, 0.5, 1e-12).unwrap();
        assert_eq!(a, 0.5);
    }

    #[test]
    fn armijo_rejects_nonpositive_decrease() {
        assert!(matches!(armijo_backtrack(|_| Ok(0.0), 0.0, 0.0, 0.5, 0.5, 1e-12), Err(Error::Contract(_))));
    }

    #[test]
    fn armijo_reports_failure() {
        assert!(matches!(
            armijo_backtrack(|_| Ok(1.0), 0.0, 1.0, 0.5, 0.5, 1e-3),
            Err(Error::LineSearchFailure { .. })
        ));
    }

    /// `½‖x‖²` subject to `x₀ + x₁ = 1`.
    struct HalfNormOnLine;
    impl Problem for HalfNormOnLine {
        fn dim(&self) -> usize {
            2
        }
        fn num_eq(&self) -> usize {
            1
        }
        fn num_ineq(&self) -> usize {
            0
        }
        fn sampling_mode(&self) -> crate::problem::SamplingMode {
            crate::problem::SamplingMode::FiniteSum { size: 1 }
        }
        fn sample_value(&self, x: &[f64], _: &crate::problem::Sample) -> f64 {
            0.5 * dot(x, x)
        }
        fn sample_value_grad_acc(&self, x: &[f64], _: &crate::problem::Sample, w: f64, g: &mut [f64]) -> f64 {
            g.iter_mut().zip(x).for_each(|(g, x)| *g += w * x);
            0.5 * dot(x, x)
        }
        fn constraints(&self, x: &[f64], c: &mut [f64], _: &mut [f64]) {
            c[0] = x[0] + x[1] - 1.0;
        }
        fn jacobians(&self, _: &[f64], j: &mut Matrix, _: &mut Matrix) {
            j.row_mut(0).copy_from_slice(&[1.0, 1.0]);
        }
        fn initial_point(&self) -> Vec<f64> {
            vec![0.0, 0.0]
        }
    }

    #[test]
    fn newton_step_solves_quadratic_in_one_iteration() {
        let p = HalfNormOnLine;
        let set = SampleSet::full(1);
        let j = Matrix::from_rows(&[[1.0, 1.0]]);
        let h = HessianModel::Identity(2);
        let x = [0.0, 0.0];
        let ctx = EqInnerContext { x: &x, lambda: &[0.0], g: &[0.0, 0.0], c: &[-1.0], j: &j, h: &h, tau_prev: 1.0 };
        let mut counters = Counters::default();
        let (prep, taken) =
            inner_iteration(&p, &set, &ctx, 0.0, SolveMode::Exact { tol: 1e-12 }, &EqParams::default(), &mut counters).unwrap();
        assert_eq!(taken.alpha, 1.0);
        assert!(prep.dl > 0.0);
        assert!(taken.audit.sufficient_decrease());
        assert!((taken.x[0] - 0.5).abs() < 1e-10 && (taken.x[1] - 0.5).abs() < 1e-10);
        assert!((taken.lambda[0] + 0.5).abs() < 1e-10);
        assert_eq!(counters.grad_evals, 0);
    }
}
