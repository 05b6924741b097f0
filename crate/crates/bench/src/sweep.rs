use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use rasqp_core::problem::Dataset;

use crate::config::RunConfig;
use crate::error::Result;
use crate::harness::{execute, RunRecord};
use crate::libsvm::read_libsvm;

pub const THREADS_ENV: &str = "RA_SQP_THREADS";

/// Worker count: `RA_SQP_THREADS` when set to a positive integer, else the
/// available parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Loads each distinct data file once.
pub fn load_datasets(jobs: &[RunConfig]) -> Result<HashMap<PathBuf, Arc<Dataset>>> {
    let mut out = HashMap::new();
    for job in jobs {
        if let Some(path) = &job.problem.data {
            if !out.contains_key(path) {
                out.insert(path.clone(), Arc::new(read_libsvm(path)?));
            }
        }
    }
    Ok(out)
}

/// Runs every job on a pool of `threads` workers. `collect` sees each
/// finished job with its index, on the calling thread, in completion order.
/// Returns records in job order.
pub fn run_jobs(
    jobs: &[RunConfig],
    threads: usize,
    mut collect: impl FnMut(usize, &Result<RunRecord>),
) -> Result<Vec<Result<RunRecord>>> {
    let datasets = load_datasets(jobs)?;
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<RunRecord>>> = (0..jobs.len()).map(|_| None).collect();
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..threads.max(1).min(jobs.len().max(1)) {
            let tx = tx.clone();
            let (next, datasets) = (&next, &datasets);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let data = job.problem.data.as_ref().map(|p| datasets[p].clone());
                if tx.send((i, execute(job, data))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, rec) in rx {
            collect(i, &rec);
            slots[i] = Some(rec);
        }
    });
    Ok(slots.into_iter().map(|s| s.expect("every job reports")).collect())
}
