// SPDX-License-Identifier: Apache-2.0
//! Seeded Monte-Carlo validators.
//!
//! Trials are split into [`MC_CHUNKS`] fixed chunks; chunk `i` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `i`. Chunk results are merged
//! in chunk order, so estimates are bit-identical for a given seed no matter
//! how many worker threads run them.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SimilarityModelParams;
use crate::{Error, Result};

pub const MC_CHUNKS: usize = 64;
const MIN_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub estimate: f64,
    /// Binomial standard error `sqrt(p̂(1−p̂)/trials)`.
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub trials: usize,
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn chunk_sizes(trials: usize) -> impl IndexedParallelIterator<Item = (usize, usize)> {
    (0..MC_CHUNKS).into_par_iter().map(move |i| (i, trials / MC_CHUNKS + usize::from(i < trials % MC_CHUNKS)))
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!("at least {MIN_TRIALS} trials required, got {trials}")));
    }
    Ok(())
}

/// Fraction of random `m × n` fair-bit matrices with at least `k` rows whose
/// `n` bits are all equal.
pub fn monte_carlo_identical_rows(
    params: &SimilarityModelParams,
    trials: usize,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    params.validate()?;
    check_trials(trials)?;
    let SimilarityModelParams { m, n, k, .. } = *params;
    if n > 64 {
        return Err(Error::InvalidArgument("group size above 64 is not supported".into()));
    }
    let row_mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let hits: Vec<usize> = chunk_sizes(trials)
        .map(|(chunk, count)| {
            let mut rng = chunk_rng(seed, chunk);
            (0..count)
                .filter(|_| {
                    let identical = (0..m)
                        .filter(|_| {
                            let row = rng.next_u64() & row_mask;
                            row == 0 || row == row_mask
                        })
                        .count();
                    identical >= k
                })
                .count()
        })
        .collect();
    let estimate = hits.iter().sum::<usize>() as f64 / trials as f64;
    Ok(ProbabilityEstimate { estimate, stderr: (estimate * (1.0 - estimate) / trials as f64).sqrt(), trials })
}

/// Mean number of all-zero rows in random `m × n` bit matrices whose bits
/// are zero with probability `p`.
pub fn monte_carlo_all_zero_rows(m: usize, n: usize, p: f64, trials: usize, seed: u64) -> Result<MeanEstimate> {
    biased_row_count(m, n, p, trials, seed, false)
}

/// Mean number of rows that are all-zero or all-one in random `m × n` bit
/// matrices whose bits are zero with probability `p`.
pub fn monte_carlo_uniform_rows(m: usize, n: usize, p: f64, trials: usize, seed: u64) -> Result<MeanEstimate> {
    biased_row_count(m, n, p, trials, seed, true)
}

fn biased_row_count(m: usize, n: usize, p: f64, trials: usize, seed: u64, count_ones: bool) -> Result<MeanEstimate> {
    SimilarityModelParams::new(m, n, 0, p)?;
    check_trials(trials)?;
    let sums: Vec<(f64, f64)> = chunk_sizes(trials)
        .map(|(chunk, count)| {
            let mut rng = chunk_rng(seed, chunk);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..count {
                let rows = (0..m)
                    .filter(|_| {
                        let zeros = (0..n).filter(|_| rng.random::<f64>() < p).count();
                        zeros == n || (count_ones && zeros == 0)
                    })
                    .count() as f64;
                s += rows;
                s2 += rows * rows;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let t = trials as f64;
    let mean = s / t;
    let var = ((s2 - t * mean * mean) / (t - 1.0)).max(0.0);
    Ok(MeanEstimate { mean, stderr: (var / t).sqrt(), trials })
}
