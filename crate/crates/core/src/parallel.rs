//! Replication harness.
//!
//! Replications are indexed `0..n`; each derives its randomness from
//! `(seed, index)` only and results are returned in index order, so output
//! does not depend on the number of worker threads. `CRS_THREADS` caps the
//! pool size.

use rayon::prelude::*;

pub const THREADS_ENV: &str = "CRS_THREADS";

fn pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        builder = builder.num_threads(n.max(1));
    }
    builder.build().expect("thread pool")
}

/// Runs `f(0), f(1), ..., f(n − 1)` in parallel and collects in order.
pub fn replicate<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    pool().install(|| (0..n).into_par_iter().map(&f).collect())
}
