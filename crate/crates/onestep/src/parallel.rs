//! Replications spread over a rayon pool. Results are collected in
//! replication order before aggregation, so they match the sequential run
//! bit for bit.

use onestep_core::harness::{Bench, BenchResult};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "ONESTEP_THREADS";

/// Thread count from `$ONESTEP_THREADS`; `None` leaves rayon's default.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
    }
}

/// Runs all cells of `bench` in parallel on `threads` workers (rayon's
/// global pool when `None`).
pub fn run_parallel(bench: &Bench, threads: Option<usize>) -> Result<BenchResult> {
    let work = || {
        let outcomes: Vec<Vec<_>> = (0..bench.cells())
            .map(|cell| {
                (0..bench.config.m)
                    .into_par_iter()
                    .map(|rep| bench.run_replication(cell, rep))
                    .collect()
            })
            .collect();
        bench.aggregate(&outcomes)
    };
    match threads {
        None => Ok(work()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Usage(e.to_string()))?;
            Ok(pool.install(work))
        }
    }
}

/// Evaluates `f` on every item in parallel, keeping input order.
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}
