use std::collections::BTreeSet;

use rasqp_core::problem::{eval_constraints, Problem};
use serde::Serialize;

use crate::error::Result;

pub const ACTIVE_TOL: f64 = 1e-6;

/// `{i : c_I(x)_i >= -tol}`
pub fn active_set(c_in: &[f64], tol: f64) -> BTreeSet<usize> {
    c_in.iter().enumerate().filter(|(_, &c)| c >= -tol).map(|(i, _)| i).collect()
}

/// `|A ∩ B| / |A ∪ B|`, with two empty sets counted as identical.
pub fn jaccard(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActiveSetRow {
    pub k: i64,
    pub active: String,
    pub size: usize,
    pub jaccard: f64,
    pub violation_inf: f64,
}

/// Active set, similarity to the reference active set and violation at
/// each `(k, x)` of a trace.
pub fn active_set_report<P: Problem + ?Sized>(
    problem: &P,
    iterates: &[(i64, Vec<f64>)],
    x_ref: &[f64],
    tol: f64,
) -> Result<Vec<ActiveSetRow>> {
    let reference = active_set(&eval_constraints(problem, x_ref)?.c_in, tol);
    iterates
        .iter()
        .map(|(k, x)| {
            let cons = eval_constraints(problem, x)?;
            let a = active_set(&cons.c_in, tol);
            let violation = cons.c_eq.iter().map(|c| c.abs()).chain(cons.c_in.iter().map(|c| c.max(0.0))).fold(0.0, f64::max);
            Ok(ActiveSetRow {
                k: *k,
                active: a.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "),
                size: a.len(),
                jaccard: jaccard(&a, &reference),
                violation_inf: violation,
            })
        })
        .collect()
}
