use alloc::vec;
use alloc::vec::Vec;

use crate::counters::Counters;
use crate::dense::{Cholesky, Matrix};
use crate::error::{Error, Result};
use crate::math::{all_finite, dot, norm_inf};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100;

const DIVERGENCE: f64 = 1e8;
const LP_REGULARIZATION: f64 = 1e-10;

/// `min ½xᵀHx + gᵀx` s.t. `A_eq x = b_eq`, `A_in x <= b_in`,
/// `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProgram {
    pub h: Matrix,
    pub g: Vec<f64>,
    pub a_eq: Matrix,
    pub b_eq: Vec<f64>,
    pub a_in: Matrix,
    pub b_in: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ConvexProgram {
    /// An unconstrained program with a zero Hessian.
    pub fn lp(g: Vec<f64>) -> Self {
        let n = g.len();
        Self {
            h: Matrix::zeros(n, n),
            g,
            a_eq: Matrix::zeros(0, n),
            b_eq: Vec::new(),
            a_in: Matrix::zeros(0, n),
            b_in: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.h.mul_vec(x)) + dot(&self.g, x)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        let shapes_ok = self.h.rows() == n
            && self.h.cols() == n
            && self.a_eq.cols() == n
            && self.a_eq.rows() == self.b_eq.len()
            && self.a_in.cols() == n
            && self.a_in.rows() == self.b_in.len()
            && self.lower.len() == n
            && self.upper.len() == n;
        if !shapes_ok {
            return Err(Error::Contract("convex program dimensions are inconsistent"));
        }
        if self.h.max_abs_asymmetry() > 1e-12 * (1.0 + self.h.frobenius()) {
            return Err(Error::Contract("program Hessian must be symmetric"));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::Contract("program bounds must satisfy lower <= upper"));
        }
        if !self.h.is_finite()
            || !all_finite(&self.g)
            || !self.a_eq.is_finite()
            || !all_finite(&self.b_eq)
            || !self.a_in.is_finite()
            || !all_finite(&self.b_in)
        {
            return Err(Error::numerical("convex program data"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgramStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

/// Nonnegative multipliers for the inequality rows and bounds, free
/// multipliers for the equalities. Stationarity reads
/// `Hx + g + A_eqᵀ eq + A_inᵀ ineq - lower + upper = 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProgramDuals {
    pub eq: Vec<f64>,
    pub ineq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals: ProgramDuals,
    pub iterations: usize,
    pub status: ProgramStatus,
}

/// Inequalities in the stacked form `G x <= h`.
struct Stacked {
    g_mat: Matrix,
    h: Vec<f64>,
    /// `(variable, is_upper)` for each bound row, after the general rows.
    bound_rows: Vec<(usize, bool)>,
}

fn stack(prog: &ConvexProgram) -> Stacked {
    let n = prog.dim();
    let mut bound_rows = Vec::new();
    for i in 0..n {
        if prog.lower[i].is_finite() {
            bound_rows.push((i, false));
        }
        if prog.upper[i].is_finite() {
            bound_rows.push((i, true));
        }
    }
    let q_in = prog.a_in.rows();
    let q = q_in + bound_rows.len();
    let mut g_mat = Matrix::zeros(q, n);
    let mut h = Vec::with_capacity(q);
    for r in 0..q_in {
        g_mat.row_mut(r).copy_from_slice(prog.a_in.row(r));
        h.push(prog.b_in[r]);
    }
    for (k, &(i, upper)) in bound_rows.iter().enumerate() {
        if upper {
            g_mat[(q_in + k, i)] = 1.0;
            h.push(prog.upper[i]);
        } else {
            g_mat[(q_in + k, i)] = -1.0;
            h.push(-prog.lower[i]);
        }
    }
    Stacked { g_mat, h, bound_rows }
}

/// Factorization of the reduced Newton system for one iterate.
struct Newton<'a> {
    prog: &'a ConvexProgram,
    g_mat: &'a Matrix,
    m: Matrix,
    m_chol: Cholesky,
    regularized: bool,
    schur: Option<Cholesky>,
}

impl<'a> Newton<'a> {
    fn factor(prog: &'a ConvexProgram, g_mat: &'a Matrix, d: &[f64], base_reg: f64) -> Result<Self> {
        let n = prog.dim();
        let mut m = prog.h.clone();
        for (r, &dr) in d.iter().enumerate() {
            let row = g_mat.row(r);
            for i in 0..n {
                if row[i] == 0.0 {
                    continue;
                }
                let w = dr * row[i];
                for j in 0..n {
                    m[(i, j)] += w * row[j];
                }
            }
        }
        let scale = (0..n).fold(1.0f64, |acc, i| acc.max(m[(i, i)].abs()));
        let mut reg = 0.0;
        let m_chol = loop {
            let mut mr = m.clone();
            for i in 0..n {
                mr[(i, i)] += reg * scale;
            }
            if let Some(c) = Cholesky::factor(&mr) {
                break c;
            }
            reg = if reg == 0.0 { base_reg } else { reg * 100.0 };
            if reg > 1e-2 {
                return Err(Error::numerical("interior-point Newton matrix"));
            }
        };
        let regularized = reg > 0.0;
        let p = prog.a_eq.rows();
        let schur = if p > 0 {
            let mut s = Matrix::zeros(p, p);
            let cols: Vec<Vec<f64>> = (0..p).map(|k| refined_solve(&m, &m_chol, regularized, prog.a_eq.row(k))).collect();
            for a in 0..p {
                for b in 0..p {
                    s[(a, b)] = dot(prog.a_eq.row(a), &cols[b]);
                }
            }
            let mut sreg = 0.0;
            loop {
                let mut sr = s.clone();
                for a in 0..p {
                    sr[(a, a)] += sreg;
                }
                if let Some(c) = Cholesky::factor(&sr) {
                    break Some(c);
                }
                sreg = if sreg == 0.0 { 1e-12 } else { sreg * 100.0 };
                if sreg > 1e-2 {
                    return Err(Error::numerical("interior-point equality Schur complement"));
                }
            }
        } else {
            None
        };
        Ok(Self { prog, g_mat, m, m_chol, regularized, schur })
    }

    fn msolve(&self, rhs: &[f64]) -> Vec<f64> {
        refined_solve(&self.m, &self.m_chol, self.regularized, rhs)
    }

    /// Solves for `(dx, dy, dz, ds)` given the residuals and the
    /// complementarity target `r_c`.
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        s: &[f64],
        z: &[f64],
        r_d: &[f64],
        r_p: &[f64],
        r_i: &[f64],
        r_c: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let q = s.len();
        // w = D r_i - S⁻¹ r_c, with D = Z S⁻¹
        let w: Vec<f64> = (0..q).map(|i| (z[i] * r_i[i] - r_c[i]) / s[i]).collect();
        let mut rhs1: Vec<f64> = r_d.iter().map(|v| -v).collect();
        if q > 0 {
            let gw = self.g_mat.tr_mul_vec(&w);
            rhs1.iter_mut().zip(&gw).for_each(|(a, b)| *a -= b);
        }
        let (dx, dy) = match &self.schur {
            None => (self.msolve(&rhs1), Vec::new()),
            Some(sc) => {
                let u = self.msolve(&rhs1);
                let mut t = self.prog.a_eq.mul_vec(&u);
                t.iter_mut().zip(r_p).for_each(|(a, b)| *a += b);
                sc.solve_in_place(&mut t);
                let at = self.prog.a_eq.tr_mul_vec(&t);
                let mut rhs2 = rhs1.clone();
                rhs2.iter_mut().zip(&at).for_each(|(a, b)| *a -= b);
                (self.msolve(&rhs2), t)
            }
        };
        let gdx = if q > 0 { self.g_mat.mul_vec(&dx) } else { Vec::new() };
        let dz: Vec<f64> = (0..q).map(|i| (z[i] * (gdx[i] + r_i[i]) - r_c[i]) / s[i]).collect();
        let ds: Vec<f64> = (0..q).map(|i| -(r_c[i] + s[i] * dz[i]) / z[i]).collect();
        (dx, dy, dz, ds)
    }
}

/// Solves `M x = rhs` through the factor of a regularized `M`, with a few
/// steps of iterative refinement against the unregularized matrix.
fn refined_solve(m: &Matrix, chol: &Cholesky, regularized: bool, rhs: &[f64]) -> Vec<f64> {
    let mut x = chol.solve(rhs);
    if !regularized {
        return x;
    }
    for _ in 0..3 {
        let mut r = m.mul_vec(&x);
        r.iter_mut().zip(rhs).for_each(|(a, b)| *a = b - *a);
        let dx = chol.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
    }
    x
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter().zip(dv).fold(f64::INFINITY, |a, (vi, di)| if *di < 0.0 { a.min(-vi / di) } else { a })
}

/// Mehrotra predictor-corrector interior-point method. Each iteration adds
/// one to `counters.barrier_iters`.
pub fn solve_program(prog: &ConvexProgram, tol: f64, max_iter: usize, counters: &mut Counters) -> Result<ProgramSolution> {
    prog.validate()?;
    let n = prog.dim();
    let p = prog.a_eq.rows();
    let Stacked { g_mat, h, bound_rows } = stack(prog);
    let q = h.len();
    let is_lp = prog.h.as_slice().iter().all(|v| *v == 0.0);
    let base_reg = if is_lp { LP_REGULARIZATION } else { 1e-14 };

    let mut x = vec![0.0; n];
    for i in 0..n {
        let (l, u) = (prog.lower[i], prog.upper[i]);
        x[i] = match (l.is_finite(), u.is_finite()) {
            (true, true) => 0.5 * (l + u),
            (true, false) => l.max(0.0),
            (false, true) => u.min(0.0),
            (false, false) => 0.0,
        };
    }
    let gx0 = if q > 0 { g_mat.mul_vec(&x) } else { Vec::new() };
    let mut s: Vec<f64> = (0..q).map(|i| (h[i] - gx0[i]).max(1.0)).collect();
    let mut z = vec![1.0; q];
    let mut y = vec![0.0; p];

    let data_scale_p = 1.0 + norm_inf(&h).max(norm_inf(&prog.b_eq));
    let data_scale_d = 1.0 + norm_inf(&prog.g);
    let mut iterations = 0;
    let mut status = ProgramStatus::MaxIter;

    loop {
        // residuals
        let mut r_d = prog.h.mul_vec(&x);
        r_d.iter_mut().zip(&prog.g).for_each(|(a, b)| *a += b);
        if p > 0 {
            let aty = prog.a_eq.tr_mul_vec(&y);
            r_d.iter_mut().zip(&aty).for_each(|(a, b)| *a += b);
        }
        if q > 0 {
            let gtz = g_mat.tr_mul_vec(&z);
            r_d.iter_mut().zip(&gtz).for_each(|(a, b)| *a += b);
        }
        let mut r_p = if p > 0 { prog.a_eq.mul_vec(&x) } else { Vec::new() };
        r_p.iter_mut().zip(&prog.b_eq).for_each(|(a, b)| *a -= b);
        let mut r_i = if q > 0 { g_mat.mul_vec(&x) } else { Vec::new() };
        for i in 0..q {
            r_i[i] += s[i] - h[i];
        }
        let mu = if q > 0 { dot(&s, &z) / q as f64 } else { 0.0 };
        let obj = prog.objective(&x);
        let pres = norm_inf(&r_p).max(norm_inf(&r_i));
        let dres = norm_inf(&r_d);
        if !(pres.is_finite() && dres.is_finite() && mu.is_finite()) {
            return Err(Error::numerical("interior-point residuals"));
        }
        let gap = mu * q as f64;
        if pres <= tol * data_scale_p && dres <= tol * data_scale_d && gap <= tol * (1.0 + obj.abs()) {
            status = ProgramStatus::Optimal;
            break;
        }
        if norm_inf(&z).max(norm_inf(&y)) > DIVERGENCE && pres <= DIVERGENCE {
            status = ProgramStatus::Infeasible;
            break;
        }
        if norm_inf(&x) > DIVERGENCE {
            status = ProgramStatus::Infeasible;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        counters.barrier_iters += 1;

        let d: Vec<f64> = (0..q).map(|i| z[i] / s[i]).collect();
        let newton = Newton::factor(prog, &g_mat, &d, base_reg)?;

        // predictor
        let r_c_aff: Vec<f64> = (0..q).map(|i| s[i] * z[i]).collect();
        let (dx_a, dy_a, dz_a, ds_a) = newton.solve(&s, &z, &r_d, &r_p, &r_i, &r_c_aff);
        let step_to_boundary = |ds: &[f64], dz: &[f64]| (0.995 * max_step(&s, ds).min(max_step(&z, dz))).min(1.0);
        let mu_at = |alpha: f64, ds: &[f64], dz: &[f64]| {
            (0..q).map(|i| (s[i] + alpha * ds[i]) * (z[i] + alpha * dz[i])).sum::<f64>() / q as f64
        };
        let ((dx, dy, dz, ds), alpha) = if q > 0 {
            let a_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a)).min(1.0);
            let sigma = crate::math::powi(mu_at(a_aff, &ds_a, &dz_a) / mu, 3).clamp(0.0, 1.0);
            // corrector
            let r_c: Vec<f64> = (0..q).map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu).collect();
            let combined = newton.solve(&s, &z, &r_d, &r_p, &r_i, &r_c);
            let alpha = step_to_boundary(&combined.3, &combined.2);
            if mu_at(alpha, &combined.3, &combined.2) <= (1.0 - 0.01 * alpha) * mu {
                (combined, alpha)
            } else {
                // plain centred step
                let r_c: Vec<f64> = (0..q).map(|i| s[i] * z[i] - sigma.max(0.1) * mu).collect();
                let centred = newton.solve(&s, &z, &r_d, &r_p, &r_i, &r_c);
                let alpha = step_to_boundary(&centred.3, &centred.2);
                (centred, alpha)
            }
        } else {
            ((dx_a, dy_a, dz_a, ds_a), 1.0)
        };
        for i in 0..n {
            x[i] += alpha * dx[i];
        }
        for i in 0..p {
            y[i] += alpha * dy[i];
        }
        for i in 0..q {
            s[i] += alpha * ds[i];
            z[i] += alpha * dz[i];
            // guard against round-off pushing a component to zero
            s[i] = s[i].max(1e-300);
            z[i] = z[i].max(1e-300);
        }
        if !all_finite(&x) || !all_finite(&z) {
            return Err(Error::numerical("interior-point iterate"));
        }
    }

    let q_in = prog.a_in.rows();
    let mut duals = ProgramDuals {
        eq: y,
        ineq: z[..q_in].to_vec(),
        lower: vec![0.0; n],
        upper: vec![0.0; n],
    };
    for (k, &(i, upper)) in bound_rows.iter().enumerate() {
        if upper {
            duals.upper[i] = z[q_in + k];
        } else {
            duals.lower[i] = z[q_in + k];
        }
    }
    let objective = prog.objective(&x);
    Ok(ProgramSolution { x, objective, duals, iterations, status })
}
