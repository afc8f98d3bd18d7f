//! Parallel trial execution.

use bvattack_core::experiments::{Theorem, TrialRunner};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::CliError;

/// Environment variable with the default worker count.
pub const THREADS_ENV: &str = "BVATTACK_THREADS";

/// Worker count from the flag, else the environment, else automatic (0).
pub fn resolve_threads(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{THREADS_ENV}={v} is not a thread count"))),
        Err(_) => Ok(0),
    }
}

/// Runs trials on a rayon pool. Results come back in seed order, so the
/// outcome does not depend on the number of workers.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    /// `threads = 0` picks the number of available cores.
    pub fn new(threads: usize) -> Result<Self, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
        Ok(Parallel { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Map `f` over `items` in parallel, preserving order.
    pub fn map<T: Sync, U: Send>(&self, items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}

impl TrialRunner for Parallel {
    fn run_trials<T: Theorem>(&self, theorem: &T, seeds: &[u64]) -> Vec<T::Trial> {
        self.map(seeds, |&s| theorem.run_trial(s))
    }
}
