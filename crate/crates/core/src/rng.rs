//! Counter-based random streams and chunked, order-fixed reductions.
//!
//! Every random draw comes from a ChaCha stream keyed by `(seed, domain)` and
//! positioned by a chunk index, so work can be split over any number of
//! threads and merged in chunk order with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples per work chunk.
pub const CHUNK: usize = 4096;

/// Stream domains, one per consumer, so distinct studies never share draws.
pub mod domain {
    pub const ENERGY: u64 = 1;
    pub const LOCAL: u64 = 2;
    pub const SCALING: u64 = 3;
    pub const DIVERGE: u64 = 4;
    pub const BETA: u64 = 5;
    pub const OSCILLATION: u64 = 6;
    pub const PROJECTION: u64 = 7;
    pub const MINIMIZE: u64 = 8;
    pub const DISCRETE: u64 = 9;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a sub-seed; used to give each row of a study its own key.
pub fn derive(seed: u64, tag: u64) -> u64 {
    splitmix(splitmix(seed) ^ tag.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// The stream for chunk `chunk` of domain `domain` under `seed`.
pub fn stream(seed: u64, domain: u64, chunk: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (i, part) in key.chunks_exact_mut(8).enumerate() {
        part.copy_from_slice(&derive(seed, domain.wrapping_mul(4).wrapping_add(i as u64)).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(chunk);
    rng
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Stats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(a: Stats, b: Stats) -> Stats {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        let (na, nb) = (a.n as f64, b.n as f64);
        Stats {
            n,
            mean: a.mean + d * nb / n as f64,
            m2: a.m2 + b.m2 + d * d * na * nb / n as f64,
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Pairwise (tree) merge of per-chunk values in index order.
pub fn pairwise<T: Clone>(items: &[T], merge: &impl Fn(T, T) -> T, empty: T) -> T {
    match items.len() {
        0 => empty,
        1 => items[0].clone(),
        n => {
            let (l, r) = items.split_at(n / 2);
            merge(pairwise(l, merge, empty.clone()), pairwise(r, merge, empty))
        }
    }
}

/// Splits `n` draws into [`CHUNK`]-sized pieces, runs `work(rng, count)` on
/// each with its own stream, and merges in chunk order. Errors from the
/// lowest-indexed failing chunk win.
pub fn chunked<T, E>(
    n: usize,
    seed: u64,
    domain: u64,
    work: impl Fn(&mut ChaCha8Rng, usize) -> Result<T, E> + Sync,
    merge: impl Fn(T, T) -> T,
    empty: T,
) -> Result<T, E>
where
    T: Clone + Send,
    E: Send,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Result<T, E>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(n - c * CHUNK);
            work(&mut stream(seed, domain, c as u64), count)
        })
        .collect();
    let parts: Vec<T> = parts.into_iter().collect::<Result<_, _>>()?;
    Ok(pairwise(&parts, &merge, empty))
}

/// Chunked accumulation of a scalar sample into [`Stats`].
pub fn chunked_stats<E: Send>(
    n: usize,
    seed: u64,
    domain: u64,
    draw: impl Fn(&mut ChaCha8Rng) -> Result<f64, E> + Sync,
) -> Result<Stats, E> {
    chunked(
        n,
        seed,
        domain,
        |rng, count| {
            let mut s = Stats::default();
            for _ in 0..count {
                s.push(draw(rng)?);
            }
            Ok(s)
        },
        Stats::merge,
        Stats::default(),
    )
}
