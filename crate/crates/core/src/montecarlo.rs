//! Sharded, seed-reproducible Monte Carlo averaging.
//!
//! Samples are split into fixed-size shards. Shard `k` draws from a ChaCha8
//! stream seeded with the root seed and stream id `k`, so the result depends
//! only on `(seed, samples)` and never on the number of worker threads.
//! Shard accumulators are merged in shard order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const SHARD_SIZE: u64 = 8192;

/// Sample mean with its standard error (absent for fewer than two samples).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: Option<f64>,
    pub samples: u64,
}

impl Estimate {
    /// `(mean - reference) / std_error`.
    pub fn z_score(&self, reference: f64) -> Option<f64> {
        self.std_error
            .filter(|se| *se > 0.0)
            .map(|se| (self.mean - reference) / se)
    }

    /// Whether `reference` lies within `k` standard errors of the mean.
    /// With a zero standard error the mean must match to within 1e-12.
    pub fn covers(&self, reference: f64, k: f64) -> bool {
        match self.std_error {
            Some(se) if se > 0.0 => (self.mean - reference).abs() <= k * se,
            _ => (self.mean - reference).abs() <= 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    fn estimate(&self) -> Estimate {
        let std_error = (self.count >= 2).then(|| {
            let var = self.m2 / (self.count - 1) as f64;
            (var / self.count as f64).sqrt()
        });
        Estimate {
            mean: self.mean,
            std_error,
            samples: self.count,
        }
    }
}

/// Root seed plus sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub samples: u64,
    pub seed: u64,
}

impl MonteCarlo {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed }
    }

    /// Random stream of shard `k`.
    pub fn shard_rng(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        rng
    }

    /// Average a `dim`-dimensional observable. `draw` fills its output
    /// slice with one realization.
    pub fn estimate<F>(&self, dim: usize, draw: F) -> Vec<Estimate>
    where
        F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
    {
        let shards = self.samples.div_ceil(SHARD_SIZE);
        let partial: Vec<Vec<Moments>> = (0..shards)
            .into_par_iter()
            .map(|k| {
                let mut rng = self.shard_rng(k);
                let take = SHARD_SIZE.min(self.samples - k * SHARD_SIZE);
                let mut acc = vec![Moments::default(); dim];
                let mut buf = vec![0.0; dim];
                for _ in 0..take {
                    draw(&mut rng, &mut buf);
                    for (m, &x) in acc.iter_mut().zip(&buf) {
                        m.push(x);
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![Moments::default(); dim];
        for shard in &partial {
            for (t, m) in total.iter_mut().zip(shard) {
                t.merge(m);
            }
        }
        total.iter().map(Moments::estimate).collect()
    }

    /// Scalar convenience wrapper around [`MonteCarlo::estimate`].
    pub fn estimate_scalar<F>(&self, draw: F) -> Estimate
    where
        F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
    {
        self.estimate(1, |rng, out| out[0] = draw(rng))[0]
    }
}
