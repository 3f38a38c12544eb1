// SPDX-License-Identifier: Apache-2.0
//! Output index streams and indexing overhead.
//!
//! An OU's stream lists the output column of every physical column, pairs
//! first. Pairs `(a, b)` sorted by `a` are written as `a_k − a_{k−1}` then
//! `b_k − a_k`; unique columns, ascending, follow as plain deltas starting
//! again from zero. Decoding needs only the stream and the pair count.

use serde::{Deserialize, Serialize};

use super::CrossbarProgram;
use crate::reorder::{ColumnOutputs, PlacedOu};
use crate::{Error, Result};

/// Width of one delta entry.
pub const DELTA_BITS: u64 = 8;
/// Shift amount stored per index entry when bit planes share a crossbar.
pub const SHIFT_RECORD_BITS: u64 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutputIndexStream {
    /// Number of repetitive pairs; they occupy the first `2·repetitive` entries.
    pub repetitive: usize,
    pub deltas: Vec<u8>,
}

impl OutputIndexStream {
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodedIndices {
    pub pairs: Vec<(usize, usize)>,
    pub uniques: Vec<usize>,
}

impl DecodedIndices {
    /// Outputs per physical column, in stream order.
    pub fn outputs(&self) -> Vec<ColumnOutputs> {
        self.pairs
            .iter()
            .map(|&(a, b)| ColumnOutputs::Pair(a, b))
            .chain(self.uniques.iter().map(|&c| ColumnOutputs::Single(c)))
            .collect()
    }
}

/// Encode the output columns of `ou`. Column indices must be below 256.
pub fn encode_output_indices(ou: &PlacedOu) -> OutputIndexStream {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut uniques: Vec<usize> = Vec::new();
    for c in &ou.columns {
        match c.outputs {
            ColumnOutputs::Pair(a, b) => pairs.push((a.min(b), a.max(b))),
            ColumnOutputs::Single(x) => uniques.push(x),
        }
    }
    pairs.sort_unstable();
    uniques.sort_unstable();
    let mut deltas = Vec::with_capacity(2 * pairs.len() + uniques.len());
    let mut prev = 0;
    for &(a, b) in &pairs {
        deltas.push((a - prev) as u8);
        deltas.push((b - a) as u8);
        prev = a;
    }
    prev = 0;
    for &u in &uniques {
        deltas.push((u - prev) as u8);
        prev = u;
    }
    OutputIndexStream { repetitive: pairs.len(), deltas }
}

pub fn decode_output_indices(stream: &OutputIndexStream) -> Result<DecodedIndices> {
    let malformed = |msg: String| Err(Error::MalformedStream(msg));
    let r = stream.repetitive;
    if 2 * r > stream.deltas.len() {
        return malformed(format!("{r} pairs need {} entries, stream has {}", 2 * r, stream.deltas.len()));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut out = DecodedIndices::default();
    let mut prev = 0usize;
    for (k, chunk) in stream.deltas[..2 * r].chunks(2).enumerate() {
        if k > 0 && chunk[0] == 0 {
            return malformed(format!("pair {k} repeats the previous first column"));
        }
        if chunk[1] == 0 {
            return malformed(format!("pair {k} joins a column with itself"));
        }
        let a = prev + chunk[0] as usize;
        let b = a + chunk[1] as usize;
        out.pairs.push((a, b));
        prev = a;
    }
    prev = 0;
    for (k, &d) in stream.deltas[2 * r..].iter().enumerate() {
        if k > 0 && d == 0 {
            return malformed(format!("unique entry {k} repeats a column"));
        }
        prev += d as usize;
        out.uniques.push(prev);
    }
    for c in out.pairs.iter().flat_map(|&(a, b)| [a, b]).chain(out.uniques.iter().copied()) {
        if !seen.insert(c) {
            return malformed(format!("column {c} appears twice"));
        }
    }
    Ok(out)
}

fn address_bits(rows: usize) -> u64 {
    if rows <= 1 {
        0
    } else {
        (usize::BITS - (rows - 1).leading_zeros()) as u64
    }
}

/// Row routing tables plus output index streams, in bits.
///
/// Every active OU row stores its activation index in `⌈log2 m⌉` bits; every
/// output index entry is one delta.
pub fn index_overhead_bits(program: &CrossbarProgram) -> u64 {
    let row_bits = address_bits(program.rows);
    ous(program).map(|ou| ou.rows.len() as u64 * row_bits + ou.index_count() as u64 * DELTA_BITS).sum()
}

/// Overhead of the same program if bit planes shared crossbars and each
/// index entry had to carry its own shift amount.
pub fn shift_record_baseline_bits(program: &CrossbarProgram) -> u64 {
    index_overhead_bits(program) + ous(program).map(|ou| ou.index_count() as u64 * SHIFT_RECORD_BITS).sum::<u64>()
}

/// Row routing bits alone.
pub fn routing_table_bits(program: &CrossbarProgram) -> u64 {
    let row_bits = address_bits(program.rows);
    ous(program).map(|ou| ou.rows.len() as u64 * row_bits).sum()
}

fn ous(program: &CrossbarProgram) -> impl Iterator<Item = &PlacedOu> {
    program.planes.iter().flat_map(|p| p.tiles.iter().flatten()).flat_map(|b| b.ous.iter())
}
