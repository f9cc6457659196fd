//! Deterministic chunked parallel map.
//!
//! Work is split into fixed-size index chunks independent of the worker
//! count, and results come back in chunk order, so any ordered reduction of
//! the output is bit-stable across thread counts.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Paths per chunk.
pub const CHUNK: u64 = 256;

/// Applies `f` to consecutive chunks of `0..n` on `workers` threads
/// (`0` means the rayon default) and returns the results in chunk order.
pub fn map_chunks<T, F>(n: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> Result<T> + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let range = |c: u64| c * CHUNK..((c + 1) * CHUNK).min(n);
    match workers {
        1 => (0..chunks).map(|c| f(range(c))).collect(),
        0 => (0..chunks).into_par_iter().map(|c| f(range(c))).collect(),
        w => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::SamplerFailure(format!("thread pool: {e}")))?
            .install(|| (0..chunks).into_par_iter().map(|c| f(range(c))).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_order_is_independent_of_workers() {
        let run = |w| map_chunks(1000, w, |r| Ok((r.start, r.end))).unwrap();
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(0));
        assert_eq!(one.first(), Some(&(0, CHUNK)));
        assert_eq!(one.last().unwrap().1, 1000);
    }

    #[test]
    fn errors_propagate() {
        let r: Result<Vec<()>> = map_chunks(600, 2, |r| {
            if r.start == CHUNK {
                Err(Error::SamplerFailure("boom".into()))
            } else {
                Ok(())
            }
        });
        assert!(r.is_err());
    }
}
