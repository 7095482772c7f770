use std::time::Instant;

use rayon::prelude::*;
use timechange_core::mc::Executor;

use crate::error::CliError;

/// Runs jobs on a dedicated rayon pool of a fixed size.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
    origin: Instant,
}

impl RayonExecutor {
    pub fn new(workers: usize) -> Result<Self, CliError> {
        if workers == 0 {
            return Err(CliError::field("--workers", "need at least one worker"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start {workers} workers: {e}")))?;
        Ok(Self { pool, origin: Instant::now() })
    }

    /// One worker per available core.
    pub fn with_default_workers() -> Result<Self, CliError> {
        Self::new(default_workers())
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl Executor for RayonExecutor {
    fn map<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(job).collect())
    }

    fn clock(&self) -> Option<f64> {
        Some(self.origin.elapsed().as_secs_f64())
    }
}
