//! Execution policy and deterministic random streams.
//!
//! Every data-parallel loop in the crate goes through [`Exec::map`], which
//! preserves index order in its output. Results therefore never depend on
//! scheduling, and the sequential path (or a build without the `parallel`
//! feature) produces the same bytes as the parallel one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to evaluate an indexed batch of independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled; otherwise falls
    /// back to sequential evaluation.
    #[default]
    Parallel,
}

impl Exec {
    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel => (0..n).map(f).collect(),
        }
    }

    /// Maps over a slice, preserving order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        self.map(items.len(), |i| f(&items[i]))
    }
}

/// Number of Monte-Carlo trials handled by one random stream.
pub const CHUNK: usize = 4096;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-task `index`: the sequential counter mixed into the global
/// seed through SplitMix64.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

/// Independent generator for sub-task `index` of a run seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, index))
}

/// Splits `trials` into `(chunk_index, chunk_len)` pairs of at most
/// [`CHUNK`] trials each.
pub fn chunks(trials: usize) -> Vec<(u64, usize)> {
    (0..trials.div_ceil(CHUNK))
        .map(|i| (i as u64, CHUNK.min(trials - i * CHUNK)))
        .collect()
}
