//! Rayon-backed path executor. Results come back indexed by path, so the
//! output is byte-identical to the sequential executor's regardless of the
//! worker count.

use rayon::prelude::*;
use spde_core::exec::PathExecutor;

use crate::error::CliError;

pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `workers = 0` uses the machine parallelism.
    pub fn new(workers: usize) -> Result<Self, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Config {
                field: "workers".into(),
                message: e.to_string(),
            })?;
        Ok(Self { pool })
    }
}

impl PathExecutor for RayonExecutor {
    fn run<T: Send>(&self, count: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        self.pool
            .install(|| (0..count).into_par_iter().map(job).collect())
    }
}
