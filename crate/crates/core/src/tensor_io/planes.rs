// SPDX-License-Identifier: Apache-2.0
use crate::bits::BitMatrix;
use crate::matrix::Matrix;
use crate::tensor_io::QuantizedTensor;
use crate::{BITS, SIGN_PLANE};

/// The eight two's-complement bit planes of an int8 matrix.
///
/// Plane `i` holds bit `i`; plane 7 is the sign plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitPlaneSet {
    planes: Vec<BitMatrix>,
}

impl BitPlaneSet {
    pub fn from_values(values: &Matrix<i8>) -> Self {
        let planes = (0..BITS)
            .map(|b| BitMatrix::from_fn(values.rows(), values.cols(), |r, c| (values.get(r, c) as u8) >> b & 1 == 1))
            .collect();
        Self { planes }
    }

    pub fn from_quantized(q: &QuantizedTensor) -> Self {
        Self::from_values(q.values())
    }

    pub fn plane(&self, i: usize) -> &BitMatrix {
        &self.planes[i]
    }

    pub fn planes(&self) -> &[BitMatrix] {
        &self.planes
    }

    pub fn rows(&self) -> usize {
        self.planes[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.planes[0].cols()
    }

    /// Rebuild the signed values: `-x7·2^7 + Σ_{i<7} x_i·2^i`.
    pub fn reconstruct(&self) -> Matrix<i8> {
        Matrix::from_fn(self.rows(), self.cols(), |r, c| {
            let mut bits = [false; BITS];
            for (b, p) in self.planes.iter().enumerate() {
                bits[b] = p.get(r, c);
            }
            reconstruct_value(bits)
        })
    }
}

/// Two's-complement value of eight bits, LSB first.
pub fn reconstruct_value(bits: [bool; BITS]) -> i8 {
    let mut v: i32 = if bits[SIGN_PLANE] { -(1 << SIGN_PLANE) } else { 0 };
    for (i, &b) in bits.iter().enumerate().take(SIGN_PLANE) {
        if b {
            v += 1 << i;
        }
    }
    v as i8
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planes_of(v: i8) -> Vec<bool> {
        let p = BitPlaneSet::from_values(&Matrix::from_vec(1, 1, vec![v]).unwrap());
        (0..BITS).map(|b| p.plane(b).get(0, 0)).collect()
    }

    #[test]
    fn named_values() {
        assert_eq!(planes_of(-128), [false, false, false, false, false, false, false, true]);
        assert_eq!(planes_of(0), [false; 8]);
        assert_eq!(planes_of(-1), [true; 8]);
    }

    #[test]
    fn exhaustive_round_trip() {
        let all: Vec<i8> = (i8::MIN..=i8::MAX).collect();
        let m = Matrix::from_vec(16, 16, all).unwrap();
        let planes = BitPlaneSet::from_values(&m);
        assert_eq!(planes.reconstruct(), m);
    }
}
