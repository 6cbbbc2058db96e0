//! Reproducible random streams and order-independent parallel reduction.
//!
//! Every Monte Carlo draw `i` gets its own ChaCha8 stream selected by `i`, so
//! a draw depends only on `(seed, i)`. Work is cut into fixed-size index
//! chunks and partial results are merged in chunk order. The output is
//! therefore identical for any thread count.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type DrawRng = ChaCha8Rng;

/// Number of consecutive draws handled by one task.
pub const CHUNK: u64 = 2048;

// chunks processed between two sequential merges, bounds memory held by partials
const CHUNKS_PER_BATCH: u64 = 64;

/// RNG for draw `index` of the experiment seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> DrawRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Maps index chunks of `0..n` to partial results in parallel and folds them
/// in index order.
///
/// `map` receives a contiguous index range; `fold` merges the next partial
/// into the accumulator.
pub fn fold_chunks<P, A, M, F>(n: u64, init: A, map: M, fold: F) -> A
where
    P: Send,
    M: Fn(Range<u64>) -> P + Sync,
    F: FnMut(A, P) -> A,
{
    fold_ranges(n, CHUNK, init, map, fold)
}

/// [`fold_chunks`] with a caller-chosen chunk length. Long chunks suit
/// partials that are expensive to merge.
pub fn fold_ranges<P, A, M, F>(n: u64, chunk: u64, init: A, map: M, mut fold: F) -> A
where
    P: Send,
    M: Fn(Range<u64>) -> P + Sync,
    F: FnMut(A, P) -> A,
{
    assert!(chunk > 0, "chunk length must be positive");
    let n_chunks = n.div_ceil(chunk);
    let mut acc = init;
    let mut start_chunk = 0;
    while start_chunk < n_chunks {
        let end_chunk = (start_chunk + CHUNKS_PER_BATCH).min(n_chunks);
        let partials: Vec<P> = (start_chunk..end_chunk)
            .into_par_iter()
            .map(|c| map(c * chunk..((c + 1) * chunk).min(n)))
            .collect();
        for p in partials {
            acc = fold(acc, p);
        }
        start_chunk = end_chunk;
    }
    acc
}

/// Evaluates `f(i)` for every `i` in `0..n` in parallel, preserving order.
pub fn map_indices<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    (0..n as usize)
        .into_par_iter()
        .with_min_len(CHUNK as usize)
        .map(|i| f(i as u64))
        .collect()
}
