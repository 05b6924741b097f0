use alloc::vec;
use alloc::vec::Vec;

use super::SymmetricOperator;
use crate::counters::Counters;
use crate::error::{Error, Result};
use crate::math::{all_finite, axpy, dot, norm2, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ExactTol,
    InexactnessAccepted,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovReport {
    pub solution: Vec<f64>,
    /// `A z - b` at the returned solution, recomputed explicitly.
    pub residual: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinresOptions {
    /// Relative residual tolerance `‖A z - b‖ <= tol ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

/// Preconditioner-free MINRES (Paige and Saunders) starting from `z = 0`.
///
/// `acceptance`, when given, is called after every iteration with the
/// current iterate and its explicit residual `A z - b`; returning `true`
/// stops the solve. The relative tolerance is always honoured as well.
pub fn minres_solve<A: SymmetricOperator + ?Sized>(
    a: &A,
    b: &[f64],
    opts: MinresOptions,
    mut acceptance: Option<&mut dyn FnMut(&[f64], &[f64]) -> bool>,
    counters: &mut Counters,
) -> Result<KrylovReport> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::Contract("right-hand side dimension mismatch"));
    }
    if !all_finite(b) {
        return Err(Error::numerical("MINRES right-hand side"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Contract("MINRES tolerance must be positive"));
    }
    let bnorm = norm2(b);
    let target = opts.tol * bnorm;
    let mut x = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let residual_of = |x: &[f64], out: &mut Vec<f64>, scratch: &mut [f64]| {
        a.apply(x, scratch);
        out.iter_mut().zip(scratch.iter().zip(b)).for_each(|(o, (ax, bi))| *o = ax - bi);
    };
    let mut res = vec![0.0; n];

    if bnorm == 0.0 {
        return Ok(KrylovReport {
            solution: x,
            residual: res,
            residual_norm: 0.0,
            iterations: 0,
            stop_reason: StopReason::ExactTol,
        });
    }
    if let Some(accept) = acceptance.as_mut() {
        residual_of(&x, &mut res, &mut scratch);
        if accept(&x, &res) {
            return Ok(KrylovReport {
                solution: x,
                residual_norm: norm2(&res),
                residual: res,
                iterations: 0,
                stop_reason: StopReason::InexactnessAccepted,
            });
        }
    }

    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut y = b.to_vec();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut beta = bnorm;
    let mut oldb = 0.0;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = bnorm;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut anorm = 0.0f64;
    let mut iterations = 0;
    let mut stop = StopReason::MaxIter;

    while iterations < opts.max_iter {
        iterations += 1;
        counters.minres_iters += 1;
        let s = 1.0 / beta;
        v.iter_mut().zip(&y).for_each(|(vi, yi)| *vi = s * yi);
        a.apply(&v, &mut y);
        if iterations >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        core::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        let prevb = oldb;
        oldb = beta;
        beta = norm2(&y);
        if !beta.is_finite() || !alfa.is_finite() {
            return Err(Error::numerical("MINRES Lanczos recurrence"));
        }
        anorm = anorm.max(sqrt(prevb * prevb + alfa * alfa + beta * beta));

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = sqrt(gbar * gbar + beta * beta);
        if gamma <= 10.0 * f64::EPSILON * anorm {
            // A is singular on the Krylov space; keep the last iterate
            break;
        }
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        core::mem::swap(&mut w1, &mut w2);
        core::mem::swap(&mut w2, &mut w);
        let denom = 1.0 / gamma;
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
        }
        axpy(phi, &w, &mut x);
        if !all_finite(&x) {
            return Err(Error::numerical("MINRES iterate"));
        }

        let lanczos_done = beta <= 10.0 * f64::EPSILON * anorm;
        let estimate_met = phibar <= target;
        if acceptance.is_some() || estimate_met || lanczos_done {
            residual_of(&x, &mut res, &mut scratch);
            let rn = norm2(&res);
            if rn <= target {
                stop = StopReason::ExactTol;
                break;
            }
            if let Some(accept) = acceptance.as_mut() {
                if accept(&x, &res) {
                    stop = StopReason::InexactnessAccepted;
                    break;
                }
            }
            if lanczos_done {
                break;
            }
        }
    }
    residual_of(&x, &mut res, &mut scratch);
    Ok(KrylovReport { solution: x, residual_norm: norm2(&res), residual: res, iterations, stop_reason: stop })
}
