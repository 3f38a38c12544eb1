// SPDX-License-Identifier: Apache-2.0
//! Grouping of stored columns into OUs and removal of all-zero OU rows.
//!
//! Identical pairs are frozen at the front of a band in pair order. The
//! remaining columns are placed greedily: a new OU is seeded with the
//! sparsest column, then the column that grows the OU's row support least
//! (ties: larger overlap with the support, then lower index) is added until
//! the OU is full. Rows outside an OU's support are all-zero across the OU
//! and are not activated.

use serde::{Deserialize, Serialize};

use super::{OuAssignment, OuShape};
use crate::bits::{BitMatrix, RowMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowCompression {
    Enabled,
    Disabled,
}

/// Logical output columns fed by one physical column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnOutputs {
    Single(usize),
    Pair(usize, usize),
}

impl ColumnOutputs {
    pub fn is_pair(self) -> bool {
        matches!(self, ColumnOutputs::Pair(..))
    }

    pub fn first(self) -> usize {
        match self {
            ColumnOutputs::Single(c) | ColumnOutputs::Pair(c, _) => c,
        }
    }

    pub fn for_each(self, mut f: impl FnMut(usize)) {
        match self {
            ColumnOutputs::Single(c) => f(c),
            ColumnOutputs::Pair(a, b) => {
                f(a);
                f(b);
            }
        }
    }

    pub fn count(self) -> usize {
        if self.is_pair() {
            2
        } else {
            1
        }
    }
}

/// A physical crossbar column inside an OU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredColumn {
    pub outputs: ColumnOutputs,
    /// Bit `k` is the cell on the OU's `k`-th active row.
    pub bits: u128,
}

/// One OU: active rows × stored columns, repetitive columns first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedOu {
    /// Active rows (positions in the source matrix), ascending.
    pub rows: Vec<usize>,
    pub columns: Vec<StoredColumn>,
}

impl PlacedOu {
    /// Number of repetitive (pair) columns; they precede the unique ones.
    pub fn repetitive(&self) -> usize {
        self.columns.iter().take_while(|c| c.outputs.is_pair()).count()
    }

    /// Output indices read out for this OU: `2·repetitive + unique`.
    pub fn index_count(&self) -> usize {
        self.columns.iter().map(|c| c.outputs.count()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressedBand {
    pub ou_id: usize,
    /// Rows of the band before compression, ascending.
    pub rows: Vec<usize>,
    pub padding: usize,
    pub ous: Vec<PlacedOu>,
}

impl CompressedBand {
    /// OU rows removed by compression, summed over this band's OUs.
    pub fn removed_rows(&self) -> usize {
        self.ous.iter().map(|ou| self.rows.len() - ou.rows.len()).sum()
    }

    pub fn stored_columns(&self) -> usize {
        self.ous.iter().map(|ou| ou.columns.len()).sum()
    }
}

enum Slot {
    Pair(usize, usize),
    Single(usize),
}

pub fn compress_rows(
    m: &BitMatrix,
    bands: &[OuAssignment],
    shape: OuShape,
    mode: RowCompression,
) -> Vec<CompressedBand> {
    bands.iter().map(|band| compress_band(m, band, shape, mode)).collect()
}

fn compress_band(m: &BitMatrix, band: &OuAssignment, shape: OuShape, mode: RowCompression) -> CompressedBand {
    let w = shape.width;
    let mask = RowMask::from_indices(m.rows(), band.rows.iter().copied());
    let mut pairs: Vec<(usize, usize)> = band.pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    pairs.sort_unstable();

    let mut groups: Vec<Vec<Slot>> = pairs
        .chunks(w)
        .map(|chunk| chunk.iter().map(|&(a, b)| Slot::Pair(a, b)).collect())
        .collect();

    match mode {
        RowCompression::Disabled => {
            let mut singles = band.singletons.iter().copied();
            if let Some(last) = groups.last_mut() {
                while last.len() < w {
                    match singles.next() {
                        Some(c) => last.push(Slot::Single(c)),
                        None => break,
                    }
                }
            }
            let rest: Vec<usize> = singles.collect();
            groups.extend(rest.chunks(w).map(|chunk| chunk.iter().map(|&c| Slot::Single(c)).collect()));
        }
        RowCompression::Enabled => {
            let mut pool: Vec<(usize, RowMask)> =
                band.singletons.iter().map(|&c| (c, m.column_support(c, &mask))).collect();
            if let Some(last) = groups.last_mut() {
                let mut support = RowMask::empty(m.rows());
                for slot in last.iter() {
                    if let Slot::Pair(a, _) = slot {
                        support = union(&support, &m.column_support(*a, &mask));
                    }
                }
                let room = w - last.len();
                last.extend(greedy_fill(&mut pool, support, room).into_iter().map(Slot::Single));
            }
            while !pool.is_empty() {
                let picked = greedy_fill(&mut pool, RowMask::empty(m.rows()), w);
                groups.push(picked.into_iter().map(Slot::Single).collect());
            }
        }
    }

    let ous = groups
        .into_iter()
        .map(|slots| {
            let mut pair_cols: Vec<(usize, usize)> = Vec::new();
            let mut singles: Vec<usize> = Vec::new();
            for s in slots {
                match s {
                    Slot::Pair(a, b) => pair_cols.push((a, b)),
                    Slot::Single(c) => singles.push(c),
                }
            }
            singles.sort_unstable();
            let active: Vec<usize> = match mode {
                RowCompression::Disabled => band.rows.clone(),
                RowCompression::Enabled => {
                    let mut support = RowMask::empty(m.rows());
                    for &(a, _) in &pair_cols {
                        support = union(&support, &m.column_support(a, &mask));
                    }
                    for &c in &singles {
                        support = union(&support, &m.column_support(c, &mask));
                    }
                    support.to_vec()
                }
            };
            let bits_of = |c: usize| {
                active.iter().enumerate().fold(0u128, |acc, (k, &r)| if m.get(r, c) { acc | 1 << k } else { acc })
            };
            let columns = pair_cols
                .iter()
                .map(|&(a, b)| StoredColumn { outputs: ColumnOutputs::Pair(a, b), bits: bits_of(a) })
                .chain(singles.iter().map(|&c| StoredColumn { outputs: ColumnOutputs::Single(c), bits: bits_of(c) }))
                .collect();
            PlacedOu { rows: active, columns }
        })
        .collect();

    CompressedBand { ou_id: band.ou_id, rows: band.rows.clone(), padding: band.padding, ous }
}

fn union(a: &RowMask, b: &RowMask) -> RowMask {
    let mut out = a.clone();
    for r in b.iter() {
        out.insert(r);
    }
    out
}

fn union_count(a: &RowMask, b: &RowMask) -> usize {
    a.words().iter().zip(b.words()).map(|(x, y)| (x | y).count_ones() as usize).sum()
}

fn overlap_count(a: &RowMask, b: &RowMask) -> usize {
    a.words().iter().zip(b.words()).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

/// Take up to `room` columns from `pool`, growing `support` as little as possible.
fn greedy_fill(pool: &mut Vec<(usize, RowMask)>, mut support: RowMask, room: usize) -> Vec<usize> {
    let mut picked = Vec::with_capacity(room);
    while picked.len() < room && !pool.is_empty() {
        let best = pool
            .iter()
            .enumerate()
            .min_by_key(|(_, (c, s))| (union_count(&support, s), std::cmp::Reverse(overlap_count(&support, s)), *c))
            .map(|(i, _)| i)
            .unwrap();
        let (c, s) = pool.remove(best);
        support = union(&support, &s);
        picked.push(c);
    }
    picked
}
