//! Deterministic parallel Monte Carlo driver.
//!
//! Trial `i` always draws from `root.split(i)`. Trials are grouped in chunks of
//! [`CHUNK`]; per-chunk moments are merged in chunk order, so results do not
//! depend on the number of worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::stats::Moments;

pub const CHUNK: u64 = 1024;

/// Thread count from `ENGINE_THREADS`, if set to a positive integer.
pub fn env_threads() -> Option<usize> {
    std::env::var("ENGINE_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `f` inside a pool of `threads` workers (or the global pool when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Simulates `trials` independent outputs of width `width` and returns one
/// [`Moments`] per output coordinate.
pub fn simulate<F>(trials: u64, root: &RandomStream, width: usize, f: F) -> Result<Vec<Moments>>
where
    F: Fn(&mut RandomStream, &mut [f64]) -> Result<()> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Moments::new(); width];
            let mut out = vec![0.0; width];
            let end = ((c + 1) * CHUNK).min(trials);
            for i in c * CHUNK..end {
                let mut stream = root.split(i);
                f(&mut stream, &mut out)?;
                for (a, &x) in acc.iter_mut().zip(&out) {
                    a.push(x);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![Moments::new(); width];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total)
}

/// Collects one output per trial, in trial order.
pub fn collect<T, F>(trials: u64, root: &RandomStream, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RandomStream) -> Result<T> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| f(&mut root.split(i)))
        .collect()
}
