// SPDX-License-Identifier: Apache-2.0
//! Exact two's-complement multiply-accumulate, computed the way a 1-bit-cell
//! crossbar does it: input bits streamed LSB-first, one weight bit plane
//! per column group, partial sums recombined by shift-and-add or
//! shift-and-subtract.
//!
//! A partial sum is subtracted exactly when one, and only one, of its two
//! operands is a sign bit: the sign plane against input magnitude bits
//! (cycles 0..=6), or the input sign bit (cycle 7) against the magnitude
//! planes. Sign against sign is added back at weight `2^14`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, BITS, SIGN_PLANE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShiftOp {
    Add,
    Subtract,
}

impl ShiftOp {
    /// Operation applied to the partial sum of `plane` during input cycle `input_bit`.
    #[inline]
    pub fn for_cycle(input_bit: usize, plane: usize) -> Self {
        if (input_bit == SIGN_PLANE) != (plane == SIGN_PLANE) {
            ShiftOp::Subtract
        } else {
            ShiftOp::Add
        }
    }

    #[inline]
    fn apply(self, acc: i64, value: i64) -> i64 {
        match self {
            ShiftOp::Add => acc + value,
            ShiftOp::Subtract => acc - value,
        }
    }
}

/// Product of two int8 values as the sum of the four sign/magnitude terms:
///
/// ```text
///   + IN7·W7·2^14
///   − IN7·2^7 · Σ_{i<7} W_i·2^i
///   − W7·2^7  · Σ_{i<7} IN_i·2^i
///   + (Σ_{i<7} IN_i·2^i)·(Σ_{i<7} W_i·2^i)
/// ```
pub fn signed_mul_decomposed(input: i8, weight: i8) -> i32 {
    let (in_sign, in_mag) = split_sign(input);
    let (w_sign, w_mag) = split_sign(weight);
    let both_signs = (in_sign * w_sign) << (2 * SIGN_PLANE);
    let input_sign_term = -((in_sign << SIGN_PLANE) * w_mag);
    let weight_sign_term = -((w_sign << SIGN_PLANE) * in_mag);
    let magnitudes = in_mag * w_mag;
    both_signs + input_sign_term + weight_sign_term + magnitudes
}

#[inline]
fn split_sign(v: i8) -> (i32, i32) {
    let bits = v as u8;
    ((bits >> SIGN_PLANE) as i32, (bits & 0x7f) as i32)
}

/// Signed 64-bit accumulators, one per output column.
///
/// Partial sums arrive already digitized (a popcount over the active rows)
/// and are folded in with a shift and a [`ShiftOp`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialSumLedger {
    acc: Vec<i64>,
}

impl PartialSumLedger {
    pub fn new(columns: usize) -> Self {
        Self { acc: vec![0; columns] }
    }

    #[inline]
    pub fn accumulate(&mut self, column: usize, partial: u32, shift: usize, op: ShiftOp) {
        self.acc[column] = op.apply(self.acc[column], (partial as i64) << shift);
    }

    pub fn values(&self) -> &[i64] {
        &self.acc
    }

    pub fn into_values(self) -> Vec<i64> {
        self.acc
    }
}

/// The eight bit columns of one weight column, plane 0 first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnPlanes {
    planes: Vec<Vec<bool>>,
}

impl ColumnPlanes {
    pub fn new(planes: Vec<Vec<bool>>) -> Result<Self> {
        if planes.len() != BITS {
            return Err(Error::LengthMismatch { expected: BITS, actual: planes.len() });
        }
        let len = planes[0].len();
        if let Some(p) = planes.iter().find(|p| p.len() != len) {
            return Err(Error::LengthMismatch { expected: len, actual: p.len() });
        }
        Ok(Self { planes })
    }

    pub fn from_weights(weights: &[i8]) -> Self {
        let planes = (0..BITS).map(|b| weights.iter().map(|&w| (w as u8) >> b & 1 == 1).collect()).collect();
        Self { planes }
    }

    pub fn len(&self) -> usize {
        self.planes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane(&self, b: usize) -> &[bool] {
        &self.planes[b]
    }
}

/// Bit-serial dot product of `inputs` with one weight column.
pub fn bit_serial_mac(inputs: &[i8], weights: &ColumnPlanes) -> Result<i64> {
    if inputs.len() != weights.len() {
        return Err(Error::LengthMismatch { expected: weights.len(), actual: inputs.len() });
    }
    let mut ledger = PartialSumLedger::new(1);
    for cycle in 0..BITS {
        let input_bits: Vec<bool> = inputs.iter().map(|&x| (x as u8) >> cycle & 1 == 1).collect();
        for plane in 0..BITS {
            let partial =
                input_bits.iter().zip(weights.plane(plane)).filter(|(&i, &w)| i && w).count() as u32;
            ledger.accumulate(0, partial, cycle + plane, ShiftOp::for_cycle(cycle, plane));
        }
    }
    Ok(ledger.values()[0])
}
