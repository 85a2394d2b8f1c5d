//! Reproducible parallel random streams.
//!
//! A run with `count` draws is cut into fixed batches of [`BATCH_SIZE`].
//! Batch `b` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `b`, so its output depends only on `(seed, b)` and never on which worker
//! runs it. Results are concatenated in batch order.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const BATCH_SIZE: usize = 1024;

/// The generator for batch `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn batches(count: usize) -> Vec<Range<usize>> {
    (0..count.div_ceil(BATCH_SIZE))
        .map(|b| b * BATCH_SIZE..((b + 1) * BATCH_SIZE).min(count))
        .collect()
}

/// Runs `f` on every batch, using `workers` threads (`0` = rayon default),
/// and concatenates the per-batch outputs in batch order.
pub fn run_batched<T, F>(count: usize, seed: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, Range<usize>) -> Result<Vec<T>> + Sync,
{
    let ranges = batches(count);
    let job = || -> Result<Vec<T>> {
        let parts: Vec<Vec<T>> = ranges
            .par_iter()
            .enumerate()
            .map(|(b, r)| f(&mut stream_rng(seed, b as u64), r.clone()))
            .collect::<Result<_>>()?;
        Ok(parts.into_iter().flatten().collect())
    };
    if workers == 0 {
        return job();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start {workers} workers: {e}")))?
        .install(job)
}
