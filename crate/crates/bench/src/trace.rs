use std::io::Write;

use rasqp_core::driver::SolveOutcome;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: i64,
    pub batch_size: usize,
    pub inner_iters: usize,
    pub grad_evals_cum: u64,
    pub minres_iters_cum: u64,
    pub barrier_iters_cum: u64,
    pub violation_inf: f64,
    pub stationarity: f64,
    pub tau_exit: f64,
    pub term_cause: &'static str,
}

/// One row per outer iteration, preceded by a `k = -1` row for the
/// initial point.
pub fn trace_rows(outcome: &SolveOutcome, tau_bar: f64) -> Vec<TraceRow> {
    let init = TraceRow {
        k: -1,
        batch_size: 0,
        inner_iters: 0,
        grad_evals_cum: 0,
        minres_iters_cum: 0,
        barrier_iters_cum: 0,
        violation_inf: outcome.initial.violation_inf,
        stationarity: outcome.initial.stationarity,
        tau_exit: tau_bar,
        term_cause: "initial",
    };
    let rows = outcome.trace.iter().map(|r| TraceRow {
        k: r.k as i64,
        batch_size: r.batch_size,
        inner_iters: r.inner_iterations,
        grad_evals_cum: r.counters.grad_evals,
        minres_iters_cum: r.counters.minres_iters,
        barrier_iters_cum: r.counters.barrier_iters,
        violation_inf: r.metrics.violation_inf,
        stationarity: r.metrics.stationarity,
        tau_exit: r.tau_exit,
        term_cause: r.cause.as_str(),
    });
    std::iter::once(init).chain(rows).collect()
}

pub fn write_trace<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
