/// Work counters accumulated over one run.
///
/// Each run owns its own instance; there is no global state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Per-sample gradient evaluations.
    pub grad_evals: u64,
    /// Per-sample objective-only evaluations (line search, merit probes).
    pub func_evals: u64,
    /// MINRES iterations over all KKT solves.
    pub minres_iters: u64,
    /// Interior-point iterations over all LP/QP solves.
    pub barrier_iters: u64,
}
