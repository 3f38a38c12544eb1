// SPDX-License-Identifier: Apache-2.0
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::{Error, Result};

/// Signed 8-bit weights with their per-tensor scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedTensor {
    values: Matrix<i8>,
    scale: f32,
    sparsity: f64,
}

impl QuantizedTensor {
    pub fn new(values: Matrix<i8>, scale: f32) -> Self {
        let zeros = values.as_slice().iter().filter(|&&v| v == 0).count();
        let sparsity = if values.is_empty() { 0.0 } else { zeros as f64 / values.len() as f64 };
        Self { values, scale, sparsity }
    }

    /// Unit-scale tensor, for weights that are already integers.
    pub fn from_values(values: Matrix<i8>) -> Self {
        Self::new(values, 1.0)
    }

    pub fn values(&self) -> &Matrix<i8> {
        &self.values
    }

    pub fn scale(&self) -> f32 {
        self.scale
    }

    /// Fraction of exactly-zero values.
    pub fn sparsity(&self) -> f64 {
        self.sparsity
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }
}

/// Zero the `⌊target·m·n⌋` smallest-magnitude entries.
///
/// Ties are broken by row-major position so the result is deterministic.
pub fn prune_magnitude(tensor: &Matrix<f32>, target_sparsity: f64) -> Result<Matrix<f32>> {
    if tensor.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&target_sparsity) {
        return Err(Error::InvalidArgument(format!("target sparsity {target_sparsity} outside [0, 1]")));
    }
    if tensor.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("tensor contains non-finite values".into()));
    }
    let n = tensor.len();
    // The epsilon absorbs representation error in products like 0.29 * 100.
    let k = ((target_sparsity * n as f64) + 1e-9).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let data = tensor.as_slice();
    order.sort_by(|&a, &b| data[a].abs().total_cmp(&data[b].abs()).then(a.cmp(&b)));
    let mut out = tensor.clone();
    for &i in &order[..k.min(n)] {
        out.as_mut_slice()[i] = 0.0;
    }
    Ok(out)
}

/// Symmetric per-tensor quantization to `[-128, 127]`.
///
/// `scale = max|v| / 127`; an all-zero tensor gets scale 1.0. Zeros map to
/// zero exactly so sparsity is preserved.
pub fn quantize_i8(tensor: &Matrix<f32>) -> Result<QuantizedTensor> {
    if tensor.is_empty() {
        return Err(Error::EmptyInput);
    }
    if tensor.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("tensor contains non-finite values".into()));
    }
    let max = tensor.as_slice().iter().fold(0f32, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Ok(QuantizedTensor::new(tensor.map(|_| 0i8), 1.0));
    }
    let max64 = max as f64;
    let values = tensor.map(|v| (v as f64 * 127.0 / max64).round().clamp(-128.0, 127.0) as i8);
    Ok(QuantizedTensor::new(values, max / 127.0))
}

/// Interpret a rank-1..4 tensor as a weight matrix (rows = inputs, cols = outputs).
///
/// * rank 1 `(m)` becomes an `m × 1` column;
/// * rank 2 `(m, n)` is taken as-is;
/// * rank 3 `(out, in, k)` becomes `(in·k) × out`;
/// * rank 4 `(out, in, kh, kw)` becomes `(in·kh·kw) × out`, each filter
///   flattened into one column.
pub fn flatten_to_matrix<T: Copy>(dims: &[u32], values: &[T]) -> Result<Matrix<T>> {
    let d: Vec<usize> = dims.iter().map(|&x| x as usize).collect();
    match d.as_slice() {
        [m] => Matrix::from_vec(*m, 1, values.to_vec()),
        [m, n] => Matrix::from_vec(*m, *n, values.to_vec()),
        [out, rest @ ..] if rest.len() <= 3 => {
            let per_filter: usize = rest.iter().product();
            if values.len() != out * per_filter {
                return Err(Error::LengthMismatch { expected: out * per_filter, actual: values.len() });
            }
            Ok(Matrix::from_fn(per_filter, *out, |r, c| values[c * per_filter + r]))
        }
        _ => Err(Error::Format(format!("cannot flatten rank-{} tensor", d.len()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f32>]) -> Matrix<f32> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn prune_two_smallest() {
        let out = prune_magnitude(&m(&[vec![1.0, -0.1], vec![0.2, 3.0]]), 0.5).unwrap();
        assert_eq!(out, m(&[vec![1.0, 0.0], vec![0.0, 3.0]]));
    }

    #[test]
    fn prune_zero_is_identity() {
        let t = m(&[vec![0.3, -2.0, 0.0], vec![5.0, 0.01, -0.02]]);
        assert_eq!(prune_magnitude(&t, 0.0).unwrap(), t);
    }

    #[test]
    fn prune_tie_break_oracle() {
        // Oracle: sort (|v|, row, col) and zero the first k.
        let t = m(&[vec![0.3, 0.3], vec![0.3, 0.3]]);
        let mut idx: Vec<(f32, usize, usize)> =
            (0..2).flat_map(|r| (0..2).map(move |c| (0.3f32, r, c))).collect();
        idx.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let (_, r0, c0) = idx[0];
        assert_eq!((r0, c0), (0, 0));
        let out = prune_magnitude(&t, 0.25).unwrap();
        assert_eq!(out, m(&[vec![0.0, 0.3], vec![0.3, 0.3]]));
    }

    #[test]
    fn prune_errors() {
        assert!(matches!(prune_magnitude(&Matrix::zeros(0, 0), 0.5), Err(Error::EmptyInput)));
        assert!(prune_magnitude(&m(&[vec![1.0]]), 1.5).is_err());
    }

    #[test]
    fn quantize_examples() {
        let q = quantize_i8(&m(&[vec![127.0, 0.0]])).unwrap();
        assert_eq!(q.values().as_slice(), &[127, 0]);
        assert_eq!(q.scale(), 1.0);

        let q = quantize_i8(&m(&[vec![-1.0, 1.0]])).unwrap();
        assert_eq!(q.values().as_slice(), &[-127, 127]);
        assert_eq!(q.scale(), 1.0 / 127.0);

        // Oracle: round(v * 127 / max|v|).
        let src = [0.5f64, -0.25, 1.0];
        let expected: Vec<i8> = src.iter().map(|v| (v * 127.0 / 1.0f64).round() as i8).collect();
        assert_eq!(expected, vec![64, -32, 127]);
        let q = quantize_i8(&m(&[vec![0.5, -0.25, 1.0]])).unwrap();
        assert_eq!(q.values().as_slice(), expected.as_slice());
        assert_eq!(q.scale(), 1.0 / 127.0);
    }

    #[test]
    fn quantize_all_zero() {
        let q = quantize_i8(&Matrix::zeros(3, 2)).unwrap();
        assert_eq!(q.scale(), 1.0);
        assert!(q.values().as_slice().iter().all(|&v| v == 0));
        assert_eq!(q.sparsity(), 1.0);
    }

    #[test]
    fn flatten_conv_filters() {
        // (out=2, in=1, kh=1, kw=3): filter 0 = [1,2,3], filter 1 = [4,5,6].
        let v = [1, 2, 3, 4, 5, 6];
        let mat = flatten_to_matrix(&[2, 1, 1, 3], &v).unwrap();
        assert_eq!((mat.rows(), mat.cols()), (3, 2));
        assert_eq!(mat.row(0), &[1, 4]);
        assert_eq!(mat.row(2), &[3, 6]);
        let conv = vec![0i8; 16 * 8 * 3 * 3];
        let mat = flatten_to_matrix(&[16, 8, 3, 3], &conv).unwrap();
        assert_eq!((mat.rows(), mat.cols()), (72, 16));
    }
}
