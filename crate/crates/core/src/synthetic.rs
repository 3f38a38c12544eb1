// SPDX-License-Identifier: Apache-2.0
//! Seeded synthetic tensors for tests, fixtures and sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matrix::Matrix;
use crate::tensor_io::{prune_magnitude, quantize_i8, QuantizedTensor};
use crate::Result;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian weights, magnitude-pruned to `sparsity`, then quantized.
pub fn pruned_gaussian(rows: usize, cols: usize, sparsity: f64, seed: u64) -> Result<QuantizedTensor> {
    let mut rng = rng(seed);
    let real = Matrix::from_fn(rows, cols, |_, _| {
        let v: f64 = StandardNormal.sample(&mut rng);
        v as f32
    });
    quantize_i8(&prune_magnitude(&real, sparsity)?)
}

/// Each value zero with probability `sparsity`, otherwise uniform over the
/// 255 non-zero int8 values.
pub fn uniform_nonzero_i8(rows: usize, cols: usize, sparsity: f64, seed: u64) -> Matrix<i8> {
    let mut rng = rng(seed);
    Matrix::from_fn(rows, cols, |_, _| {
        if rng.random::<f64>() < sparsity {
            0
        } else {
            let v: i16 = rng.random_range(-128..=126);
            (if v >= 0 { v + 1 } else { v }) as i8
        }
    })
}

/// Uniform random int8 values (zero included).
pub fn uniform_i8(rows: usize, cols: usize, seed: u64) -> Matrix<i8> {
    let mut rng = rng(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.random::<i8>())
}
