// SPDX-License-Identifier: Apache-2.0
use serde::{Deserialize, Serialize};

use crate::bits::{BitMatrix, RowMask};
use crate::{Error, Result};

/// Similarity Hamming distance: number of rows where `a` and `b` differ.
pub fn shd(a: &[bool], b: &[bool]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), actual: b.len() });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnPairEntry {
    pub cols: (usize, usize),
    /// Rows (ascending) where the two columns agree.
    pub rowid: Vec<usize>,
    pub numrows: usize,
}

/// Greedy minimum-distance column pairing, in pairing order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnPairDict {
    pub entries: Vec<ColumnPairEntry>,
    /// Left over when the column count is odd.
    pub unpaired: Option<usize>,
}

impl ColumnPairDict {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Pair the columns `cols` of `m` on the rows in `rows`.
///
/// Repeatedly takes the remaining pair with the smallest distance, ties
/// going to the lexicographically smallest `(i, j)`, until fewer than two
/// columns remain. Sorting all pairs once by `(distance, i, j)` and taking
/// them greedily is equivalent to re-scanning after every pick.
pub fn column_pair(m: &BitMatrix, cols: &[usize], rows: &RowMask) -> ColumnPairDict {
    let mut sorted_cols = cols.to_vec();
    sorted_cols.sort_unstable();
    sorted_cols.dedup();
    if sorted_cols.len() < 2 {
        return ColumnPairDict { entries: Vec::new(), unpaired: sorted_cols.first().copied() };
    }
    let mut candidates = Vec::with_capacity(sorted_cols.len() * (sorted_cols.len() - 1) / 2);
    for (x, &i) in sorted_cols.iter().enumerate() {
        for &j in &sorted_cols[x + 1..] {
            candidates.push((m.masked_distance(i, j, rows), i, j));
        }
    }
    candidates.sort_unstable();

    let max_col = sorted_cols[sorted_cols.len() - 1];
    let mut used = vec![false; max_col + 1];
    let total = rows.count();
    let mut entries = Vec::with_capacity(sorted_cols.len() / 2);
    for (d, i, j) in candidates {
        if used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        entries.push(ColumnPairEntry {
            cols: (i, j),
            rowid: m.agreeing_rows(i, j, rows).to_vec(),
            numrows: total - d as usize,
        });
        if entries.len() == sorted_cols.len() / 2 {
            break;
        }
    }
    let unpaired = sorted_cols.iter().copied().find(|&c| !used[c]);
    ColumnPairDict { entries, unpaired }
}

/// Pair `(a, b)` among `cols` with the smallest distance on `rows`
/// (lexicographic tie-break), with its distance.
pub fn min_distance_pair(m: &BitMatrix, cols: &[usize], rows: &RowMask) -> Option<(usize, usize, u32)> {
    min_distance_pair_within(m, cols, rows, u32::MAX)
}

/// As [`min_distance_pair`], but `None` when the smallest distance exceeds `cap`.
pub(crate) fn min_distance_pair_within(
    m: &BitMatrix,
    cols: &[usize],
    rows: &RowMask,
    cap: u32,
) -> Option<(usize, usize, u32)> {
    let mut cols = cols.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if cols.len() < 2 {
        return None;
    }
    let mask = rows.words();
    if mask.len() <= 2 {
        let word = |c: usize, k: usize| m.column(c).get(k).zip(mask.get(k)).map_or(0, |(w, r)| w & r);
        let keys: Vec<u128> = cols.iter().map(|&c| word(c, 0) as u128 | (word(c, 1) as u128) << 64).collect();
        closest_pair(&cols, &keys, |a, b| (a ^ b).count_ones(), cap)
    } else {
        let stride = mask.len();
        let masked: Vec<u64> =
            cols.iter().flat_map(|&c| m.column(c).iter().zip(mask).map(|(w, k)| w & k)).collect();
        let keys: Vec<&[u64]> = masked.chunks(stride).collect();
        let dist = |a: &[u64], b: &[u64]| a.iter().zip(b).map(|(p, q)| (p ^ q).count_ones()).sum();
        closest_pair(&cols, &keys, dist, cap)
    }
}

/// Closest pair of `keys` (one per ascending column in `cols`), lexicographic
/// on ties, ignoring distances above `cap`.
fn closest_pair<K: Copy + Ord>(
    cols: &[usize],
    keys: &[K],
    dist: impl Fn(K, K) -> u32,
    cap: u32,
) -> Option<(usize, usize, u32)> {
    // Identical columns: the class with the smallest first member gives the
    // lexicographically smallest zero-distance pair.
    let mut order: Vec<usize> = (0..cols.len()).collect();
    order.sort_unstable_by_key(|&x| (keys[x], x));
    let zero = order
        .windows(2)
        .enumerate()
        .filter(|&(k, w)| keys[w[0]] == keys[w[1]] && (k == 0 || keys[order[k - 1]] != keys[w[0]]))
        .map(|(_, w)| (w[0], w[1]))
        .min();
    if let Some((x, y)) = zero {
        return Some((cols[x], cols[y], 0));
    }
    if cap == 0 {
        return None;
    }

    // No zero pair, so the first distance-1 pair in scan order is the answer.
    let mut best: Option<(usize, usize, u32)> = None;
    let mut bound = cap;
    for (x, &a) in keys.iter().enumerate() {
        for (y, &b) in keys.iter().enumerate().skip(x + 1) {
            let d = dist(a, b);
            if d < bound || (d == bound && best.is_none()) {
                best = Some((cols[x], cols[y], d));
                if d == 1 {
                    return best;
                }
                bound = d;
            }
        }
    }
    best
}
