//! Fan-out over independent sample paths.
//!
//! Solvers are written against this trait so the CLI can drop in a thread
//! pool while the core stays single-threaded and `no_std`. Results come back
//! indexed by path, so aggregation order — and therefore every reduction —
//! is independent of scheduling.

use alloc::vec::Vec;

pub trait PathExecutor {
    fn run<T: Send>(&self, count: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T>;
}

/// Runs every path on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl PathExecutor for Sequential {
    fn run<T: Send>(&self, count: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        (0..count).map(job).collect()
    }
}
