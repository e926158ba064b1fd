//! Seeded replication engine.
//!
//! Per-replication seeds are drawn up front from the master seed, so the
//! worker count never changes what a replication sees; results come back in
//! replication order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub fn derive_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| rng.gen()).collect()
}

/// Runs `task(index, seed)` for every replication on `threads` workers.
pub fn run_replications<T, F>(master_seed: u64, count: usize, threads: usize, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    let seeds = derive_seeds(master_seed, count);
    if threads <= 1 {
        return seeds.iter().enumerate().map(|(i, &s)| task(i, s)).collect();
    }
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| seeds.par_iter().enumerate().map(|(i, &s)| task(i, s)).collect())
}
