//! Independent dense oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rasqp_core::driver::SolveOutcome;
use rasqp_core::linalg::{to_dense, HessianModel, KktOperator, LbfgsModel};
use rasqp_core::problem::{RandomNlp, RandomNlpSpec};
use rasqp_core::qp::ConvexProgram;
use rasqp_core::sqp::{
    compute_step, direction_step, feasibility_step, sigma_bounds, EqInnerContext, EqParams, NormMode, SolveMode,
};
use rasqp_core::{Counters, Matrix};

pub fn gauss<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gauss_vec<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| gauss(rng)).collect()
}

pub fn gauss_matrix<R: RngCore + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_row_major(rows, cols, gauss_vec(rng, rows * cols))
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_row_major(m.nrows(), m.ncols(), (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect())
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Random symmetric matrix: definite, indefinite, or saddle-point shaped.
pub fn random_symmetric<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    match rng.random_range(0..3) {
        0 => {
            let m = to_na(&gauss_matrix(rng, n, n));
            &m * m.transpose() + DMatrix::identity(n, n)
        }
        1 => {
            let m = to_na(&gauss_matrix(rng, n, n));
            (&m + m.transpose()) * 0.5
        }
        _ => {
            let m = rng.random_range(1..=n / 2);
            let nh = n - m;
            let mut k = DMatrix::zeros(n, n);
            let hm = to_na(&gauss_matrix(rng, nh, nh));
            k.view_mut((0, 0), (nh, nh)).copy_from(&(&hm * hm.transpose() + DMatrix::identity(nh, nh)));
            let j = to_na(&gauss_matrix(rng, m, nh));
            k.view_mut((nh, 0), (m, nh)).copy_from(&j);
            k.view_mut((0, nh), (nh, m)).copy_from(&j.transpose());
            k
        }
    }
}

/// Textbook BFGS recursion from `γI` over the stored pairs, oldest first,
/// with `γ = yᵀy / sᵀy` of the newest pair.
pub fn dense_bfgs(n: usize, pairs: &[(Vec<f64>, Vec<f64>)]) -> DMatrix<f64> {
    let gamma = pairs.last().map_or(1.0, |(s, y)| {
        let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
        y.iter().map(|v| v * v).sum::<f64>() / sy
    });
    let mut b = DMatrix::identity(n, n) * gamma;
    for (s, y) in pairs {
        let s = DVector::from_column_slice(s);
        let y = DVector::from_column_slice(y);
        let bs = &b * &s;
        let sbs = s.dot(&bs);
        b = &b - &bs * bs.transpose() / sbs + &y * y.transpose() / y.dot(&s);
    }
    b
}

/// Brute-force optimum of a convex program: minimum objective over the
/// feasible solutions of every equality-constrained subproblem obtained by
/// fixing a subset of inequality rows and bounds as active.
pub fn enumerate_program(prog: &ConvexProgram) -> Option<f64> {
    let n = prog.dim();
    let mut rows: Vec<(Vec<f64>, f64)> = (0..prog.a_in.rows()).map(|i| (prog.a_in.row(i).to_vec(), prog.b_in[i])).collect();
    for i in 0..n {
        let mut e = vec![0.0; n];
        if prog.upper[i].is_finite() {
            e[i] = 1.0;
            rows.push((e.clone(), prog.upper[i]));
        }
        if prog.lower[i].is_finite() {
            e[i] = -1.0;
            rows.push((e, -prog.lower[i]));
        }
    }
    let me = prog.a_eq.rows();
    let feasible = |x: &DVector<f64>| {
        let tol = 1e-9 * (1.0 + x.amax());
        rows.iter().all(|(a, b)| a.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() <= b + tol)
            && (0..me).all(|i| (prog.a_eq.row(i).iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() - prog.b_eq[i]).abs() <= tol)
    };
    let h = to_na(&prog.h);
    let mut best: Option<f64> = None;
    let r = rows.len();
    for mask in 0u32..(1 << r) {
        let k = mask.count_ones() as usize;
        if me + k > n {
            continue;
        }
        let active: Vec<usize> = (0..r).filter(|i| mask & (1 << i) != 0).collect();
        let m = me + k;
        let mut kkt = DMatrix::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&h);
        let mut rhs = DVector::zeros(n + m);
        for i in 0..n {
            rhs[i] = -prog.g[i];
        }
        for (row, (coef, b)) in (0..me)
            .map(|i| (prog.a_eq.row(i).to_vec(), prog.b_eq[i]))
            .chain(active.iter().map(|&i| rows[i].clone()))
            .enumerate()
        {
            for j in 0..n {
                kkt[(n + row, j)] = coef[j];
                kkt[(j, n + row)] = coef[j];
            }
            rhs[n + row] = b;
        }
        let svd = kkt.clone().svd(true, true);
        let smax = svd.singular_values.max();
        if svd.singular_values.min() <= 1e-10 * smax.max(1.0) {
            continue;
        }
        let Ok(z) = svd.solve(&rhs, 0.0) else { continue };
        let x = z.rows(0, n).into_owned();
        if feasible(&x) {
            let f = prog.objective(x.as_slice());
            best = Some(best.map_or(f, |b: f64| b.min(f)));
        }
    }
    best
}

/// Random convex program with `n <= 6`, box bounds and a known feasible
/// point. Half are LPs, half strictly convex QPs.
pub fn random_program<R: RngCore + ?Sized>(rng: &mut R) -> ConvexProgram {
    let n = rng.random_range(1..=6usize);
    let me = rng.random_range(0..=1usize.min(n - 1));
    let mi = rng.random_range(0..=3usize);
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
    let h = if rng.random_bool(0.5) {
        Matrix::zeros(n, n)
    } else {
        let m = to_na(&gauss_matrix(rng, n, n));
        from_na(&(&m * m.transpose() + DMatrix::identity(n, n) * 0.1))
    };
    let a_eq = gauss_matrix(rng, me, n);
    let b_eq = a_eq.mul_vec(&x0);
    let a_in = gauss_matrix(rng, mi, n);
    let b_in: Vec<f64> = a_in.mul_vec(&x0).into_iter().map(|v| v + rng.random_range(0.0..0.5)).collect();
    ConvexProgram {
        h,
        g: gauss_vec(rng, n),
        a_eq,
        b_eq,
        a_in,
        b_in,
        lower: vec![-1.0; n],
        upper: vec![1.0; n],
    }
}

/// `(∇f, c_I, J_E, J_I)` at a constructed first-order point: some
/// inequalities active with nonnegative multipliers, the rest strictly
/// inactive with zero multipliers.
pub fn constructed_kkt_point<R: RngCore + ?Sized>(rng: &mut R) -> (Vec<f64>, Vec<f64>, Matrix, Matrix) {
    let n = rng.random_range(2..=6usize);
    let me = rng.random_range(0..n);
    let mi = rng.random_range(0..=4usize);
    let j_eq = gauss_matrix(rng, me, n);
    let j_in = gauss_matrix(rng, mi, n);
    let lam_e = gauss_vec(rng, me);
    let mut c_in = vec![0.0; mi];
    let mut lam_i = vec![0.0; mi];
    for i in 0..mi {
        if rng.random_bool(0.5) {
            lam_i[i] = rng.random_range(0.0..2.0);
        } else {
            c_in[i] = -rng.random_range(0.1..1.0);
        }
    }
    let mut grad = vec![0.0; n];
    for (i, l) in lam_e.iter().enumerate() {
        grad.iter_mut().zip(j_eq.row(i)).for_each(|(g, a)| *g -= l * a);
    }
    for (i, l) in lam_i.iter().enumerate() {
        grad.iter_mut().zip(j_in.row(i)).for_each(|(g, a)| *g -= l * a);
    }
    (grad, c_in, j_eq, j_in)
}

/// First broken line-search or merit invariant in the audit log.
pub fn audit_violation(outcome: &SolveOutcome) -> Option<String> {
    if outcome.audit.is_empty() {
        return Some("no steps taken".into());
    }
    for (i, e) in outcome.audit.iter().enumerate() {
        let s = e.step;
        let at = format!("outer {} inner {}", e.k, e.j);
        if !(s.tau > 0.0 && s.tau <= s.tau_prev) {
            return Some(format!("{at}: τ went from {} to {}", s.tau_prev, s.tau));
        }
        if !(s.dl > 0.0) {
            return Some(format!("{at}: line search entered with Δl = {}", s.dl));
        }
        if !(s.alpha > 0.0 && s.alpha <= 1.0) || !s.sufficient_decrease() {
            return Some(format!("{at}: accepted step fails sufficient decrease {s:?}"));
        }
        if let Some(prev) = i.checked_sub(1).map(|p| outcome.audit[p]) {
            if prev.k == e.k && (e.j != prev.j + 1 || s.tau_prev != prev.step.tau) {
                return Some(format!("{at}: τ not carried within the inner loop"));
            }
        }
    }
    None
}

/// Checks that every recorded gradient evaluation is accounted for by the
/// per-outer batch sizes.
pub fn conservation_violation(outcome: &SolveOutcome) -> Option<String> {
    let mut prev = 0u64;
    for r in &outcome.trace {
        let spent = r.counters.grad_evals - prev;
        if spent != (r.batch_size * r.gradient_batches) as u64 {
            return Some(format!("outer {}: {spent} evaluations for {} batches of {}", r.k, r.gradient_batches, r.batch_size));
        }
        prev = r.counters.grad_evals;
    }
    if outcome.counters.grad_evals != prev + outcome.unrecorded_grad_evals {
        return Some(format!("total {} but trace accounts for {prev}", outcome.counters.grad_evals));
    }
    None
}

/// Random equality-only or general instance of dimension 3 to 6.
pub fn random_nlp<R: RngCore + ?Sized>(rng: &mut R, general: bool) -> RandomNlp {
    let dim = rng.random_range(3..=6usize);
    let spec = if general {
        RandomNlpSpec {
            dim,
            num_eq: rng.random_range(0..=2usize),
            num_balls: rng.random_range(1..=2usize),
            num_halfspaces: rng.random_range(0..=3usize),
            num_samples: 200,
        }
    } else {
        RandomNlpSpec { dim, num_eq: rng.random_range(1..dim), num_balls: 0, num_halfspaces: 0, num_samples: 200 }
    };
    RandomNlp::generate(&spec, rng).unwrap()
}

/// Interior-point solutions are accurate to about the solver tolerance.
pub const QP_SLACK: f64 = 1e-7;

/// `(‖d(g₁) − d(g₂)‖, ‖g₁ − g₂‖ + slack)` for the robust direction QP with
/// `H = I` on a random instance.
pub fn robust_step_pair<R: RngCore + ?Sized>(rng: &mut R, mode: NormMode) -> (f64, f64) {
    let n = rng.random_range(2..=5usize);
    let me = rng.random_range(0..=1usize);
    let mi = rng.random_range(0..=3usize);
    let j_eq = gauss_matrix(rng, me, n);
    let j_in = gauss_matrix(rng, mi, n);
    let c_eq = gauss_vec(rng, me);
    let c_in = gauss_vec(rng, mi);
    let h = HessianModel::Identity(n);
    let viol_inf = NormMode::Linf.violation(&c_eq, &c_in);
    let viol_l1 = NormMode::L1.violation(&c_eq, &c_in);
    let (sigma_p, sigma_d) = sigma_bounds(viol_inf, viol_l1, mode, n);
    let mut counters = Counters::default();
    let feas = feasibility_step(&c_eq, &c_in, &j_eq, &j_in, sigma_p, mode, &mut counters).unwrap();
    let scale = if rng.random_bool(0.5) { 1.0 } else { 100.0 };
    let g1: Vec<f64> = gauss_vec(rng, n).into_iter().map(|v| v * scale).collect();
    let eps = rng.random_range(1e-3..1.0);
    let g2: Vec<f64> = g1.iter().zip(gauss_vec(rng, n)).map(|(a, b)| a + eps * scale * b).collect();
    let d1 = direction_step(&g1, &h, &c_eq, &c_in, &j_eq, &j_in, &feas, sigma_d, mode, &mut counters).unwrap().d;
    let d2 = direction_step(&g2, &h, &c_eq, &c_in, &j_eq, &j_in, &feas, sigma_d, mode, &mut counters).unwrap().d;
    (norm(&sub(&d1, &d2)), norm(&sub(&g1, &g2)) + QP_SLACK * (1.0 + norm(&d1)))
}

fn random_hessian<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> HessianModel {
    if rng.random_bool(0.5) {
        return HessianModel::Identity(n);
    }
    let mut m = LbfgsModel::with_default_memory(n);
    for _ in 0..rng.random_range(1..=n) {
        let s = gauss_vec(rng, n);
        let y: Vec<f64> = s.iter().zip(gauss_vec(rng, n)).map(|(a, b)| a + 0.3 * b).collect();
        m.update(&s, &y);
    }
    HessianModel::Lbfgs(m)
}

/// `(‖step(g₁) − step(g₂)‖, ‖K⁻¹‖·‖g₁ − g₂‖)` for the equality KKT system
/// on a random instance, with `‖K⁻¹‖` from a dense SVD.
pub fn equality_step_pair<R: RngCore + ?Sized>(rng: &mut R) -> (f64, f64) {
    let n = rng.random_range(2..=6usize);
    let m = rng.random_range(1..n);
    let h = random_hessian(rng, n);
    let j = gauss_matrix(rng, m, n);
    let x = gauss_vec(rng, n);
    let lambda = gauss_vec(rng, m);
    let c = gauss_vec(rng, m);
    let g1 = gauss_vec(rng, n);
    let eps = rng.random_range(1e-3..1.0);
    let g2: Vec<f64> = g1.iter().zip(gauss_vec(rng, n)).map(|(a, b)| a + eps * b).collect();
    let k = to_na(&to_dense(&KktOperator { h: &h, j: &j }));
    let kappa = 1.0 / k.singular_values().min();
    let params = EqParams::default();
    let step = |g: &[f64]| {
        let ctx = EqInnerContext { x: &x, lambda: &lambda, g, c: &c, j: &j, h: &h, tau_prev: 1.0 };
        let s = compute_step(&ctx, SolveMode::Exact { tol: 1e-12 }, &params, &mut Counters::default()).unwrap();
        [s.d, s.delta].concat()
    };
    (norm(&sub(&step(&g1), &step(&g2))), kappa * norm(&sub(&g1, &g2)))
}
