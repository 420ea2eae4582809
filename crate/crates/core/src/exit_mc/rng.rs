//! Counter-based random streams and order-fixed parallel reduction.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Environment variable read by [`workers_from_env`]. Only affects speed.
pub const WORKERS_ENV: &str = "HEATWALK_WORKERS";

/// Paths per chunk; chunk `c` always covers paths `[c * CHUNK, (c+1) * CHUNK)`.
pub const CHUNK: usize = 4096;

/// Identifies one ChaCha8 stream: identical `(seed, stream)` pairs replay identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }

    /// Sub-stream `index` of this stream's family; distinct `(stream, index)` never collide
    /// while `index < 2^32` and `stream < 2^32`.
    pub fn child(&self, index: u64) -> RngStream {
        RngStream { seed: self.seed, stream: (self.stream << 32) | (index & 0xffff_ffff) }
    }
}

/// Uniform on the open interval (0,1) from the top 52 bits of `r`; the lowest bit stays free.
/// The range is `[2^-53, 1 - 2^-53]`, both ends exactly representable.
#[inline]
pub fn open_unit(r: u64) -> f64 {
    ((r >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Uniform in (0,1) drawn from `rng`.
#[inline]
pub fn next_open_unit<R: RngCore>(rng: &mut R) -> f64 {
    open_unit(rng.next_u64())
}

/// Running mean and centred second moment.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64 / n as f64);
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> McEstimate {
        McEstimate { mean: self.mean, std_error: (self.variance() / self.n.max(1) as f64).sqrt(), paths: self.n }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: u64,
}

impl McEstimate {
    pub fn exact(v: f64) -> Self {
        Self { mean: v, std_error: 0.0, paths: 0 }
    }

    /// True when `|mean - target| <= k * std_error + slack`.
    pub fn within(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + slack
    }
}

/// Splits `paths` into fixed chunks, runs `f(chunk_index, path_range)` in parallel and returns
/// the results in chunk order. Output never depends on the number of worker threads.
pub fn map_chunks<T, F>(paths: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, std::ops::Range<usize>) -> T + Sync,
{
    let chunks = paths.div_ceil(CHUNK);
    (0..chunks).into_par_iter().map(|c| f(c, c * CHUNK..((c + 1) * CHUNK).min(paths))).collect()
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&w| w > 0)
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool").install(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_replay_and_differ() {
        let a: Vec<u64> = (0..4)
            .map({
                let mut r = RngStream::new(7, 3).rng();
                move |_| r.next_u64()
            })
            .collect();
        let mut r = RngStream::new(7, 3).rng();
        assert!(a.iter().all(|&v| v == r.next_u64()));
        let mut other = RngStream::new(7, 4).rng();
        assert_ne!(a[0], other.next_u64());
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-12);
        assert!((a.variance() - all.variance()).abs() < 1e-10);
    }

    #[test]
    fn chunking_is_thread_independent() {
        let run = || {
            map_chunks(10_000, |c, r| {
                let mut rng = RngStream::new(1, c as u64).rng();
                r.map(|_| open_unit(rng.next_u64())).sum::<f64>()
            })
        };
        assert_eq!(with_workers(1, run), with_workers(4, run));
    }

    #[test]
    fn open_unit_bounds() {
        assert!(open_unit(0) > 0.0);
        assert!(open_unit(u64::MAX) < 1.0);
    }
}
