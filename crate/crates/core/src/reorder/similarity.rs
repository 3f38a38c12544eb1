// SPDX-License-Identifier: Apache-2.0
//! Row reordering towards column repetitiveness.
//!
//! Each outer iteration pairs all columns on the remaining rows, then uses
//! every pair with at least `h` agreeing rows as a seed: restricted to the
//! seed's agreeing rows, the closest remaining column pair is chained in
//! while at least `h` rows still agree on every chained pair. The seed whose
//! chain is longest wins; its first `h` agreeing rows become the next band.
//! Every column is eligible again in the next iteration, because the next
//! band covers different rows.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::pairing::{column_pair, min_distance_pair_within};
use super::{OuAssignment, OuShape};
use crate::bits::{BitMatrix, RowMask};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReorderStep {
    /// Step 1: pairing of the remaining rows, as `(i, j, numrows)`.
    Candidates { iteration: usize, remaining_rows: usize, pairs: Vec<(usize, usize, usize)> },
    /// Step 2: a seed and the pairs chained onto it, with agreeing rows after each.
    Chain { iteration: usize, seed: (usize, usize, usize), chained: Vec<(usize, usize, usize)> },
    /// Step 3: the band chosen for this iteration.
    Selected { iteration: usize, ou_id: usize, rows: Vec<usize>, pairs: Vec<(usize, usize)> },
    /// No seed reached the OU height; the next rows are taken in order.
    Fallback { iteration: usize, ou_id: usize, rows: Vec<usize> },
    /// Fewer than `h` rows remained; they form a padded band.
    Leftover { ou_id: usize, rows: Vec<usize>, padding: usize },
}

impl fmt::Display for ReorderStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReorderStep::Candidates { iteration, remaining_rows, pairs } => {
                write!(f, "[iter {iteration}] step 1: {remaining_rows} rows remain; column pairs by sHD:")?;
                for (i, j, n) in pairs {
                    write!(f, " ({i},{j}):{n}")?;
                }
                Ok(())
            }
            ReorderStep::Chain { iteration, seed: (i, j, n), chained } => {
                write!(f, "[iter {iteration}] step 2: seed ({i},{j}) with {n} identical rows")?;
                for (a, b, rows) in chained {
                    write!(f, " -> ({a},{b}) leaves {rows}")?;
                }
                Ok(())
            }
            ReorderStep::Selected { iteration, ou_id, rows, pairs } => {
                write!(f, "[iter {iteration}] step 3: OU {ou_id} rows {rows:?} pairs {pairs:?}")
            }
            ReorderStep::Fallback { iteration, ou_id, rows } => {
                write!(f, "[iter {iteration}] no seed reaches the OU height; OU {ou_id} takes rows {rows:?}")
            }
            ReorderStep::Leftover { ou_id, rows, padding } => {
                write!(f, "leftover: OU {ou_id} rows {rows:?} with {padding} padding rows")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityReordering {
    /// Every band, the padded leftover band (if any) last.
    pub assignments: Vec<OuAssignment>,
    /// Rows that ended up in the padded leftover band.
    pub leftover_rows: Vec<usize>,
    /// Step log, empty unless requested.
    pub trace: Vec<ReorderStep>,
}

impl SimilarityReordering {
    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|s| format!("{s}\n")).collect()
    }
}

/// Agreeing rows and the pairs chained on them.
type Chain = (Vec<usize>, Vec<(usize, usize)>);

pub fn reorder_similarity(m: &BitMatrix, shape: OuShape, trace: bool) -> SimilarityReordering {
    reorder_with(m, shape, trace, m.rows() > 128)
}

/// `stepwise` forces the one-pair-at-a-time chain search that works for any
/// row count; otherwise columns are packed into `u128` words.
pub(crate) fn reorder_with(m: &BitMatrix, shape: OuShape, trace: bool, stepwise: bool) -> SimilarityReordering {
    let h = shape.height;
    let all_cols: Vec<usize> = (0..m.cols()).collect();
    let packed: Option<Vec<u128>> = (!stepwise).then(|| (0..m.cols()).map(|c| pack(m.column(c))).collect());
    let mut remaining = RowMask::full(m.rows());
    let mut assignments = Vec::new();
    let mut steps = Vec::new();
    let mut iteration = 0;

    while remaining.count() >= h {
        let dict = column_pair(m, &all_cols, &remaining);
        if trace {
            steps.push(ReorderStep::Candidates {
                iteration,
                remaining_rows: remaining.count(),
                pairs: dict.entries.iter().map(|e| (e.cols.0, e.cols.1, e.numrows)).collect(),
            });
        }

        let mut best: Option<Chain> = None;
        for entry in &dict.entries {
            if entry.numrows < h {
                continue;
            }
            let (rows, pairs, chained) = match &packed {
                Some(bits) => {
                    let seed_rows = entry.rowid.iter().fold(0u128, |acc, &r| acc | 1 << r);
                    let (rows, pairs, chained) = chain_packed(bits, entry.cols, seed_rows, h);
                    (unpack(rows), pairs, chained)
                }
                None => chain_stepwise(m, &all_cols, entry.cols, &entry.rowid, h),
            };
            if trace {
                steps.push(ReorderStep::Chain { iteration, seed: (entry.cols.0, entry.cols.1, entry.numrows), chained });
            }
            if best.as_ref().is_none_or(|(_, p)| pairs.len() > p.len()) {
                best = Some((rows.into_iter().take(h).collect(), pairs));
            }
            // Later seeds only win with a strictly longer chain.
            if !trace && best.as_ref().is_some_and(|(_, p)| p.len() == all_cols.len() / 2) {
                break;
            }
        }

        let ou_id = assignments.len();
        let (rows, pairs) = match best {
            Some(found) => {
                if trace {
                    steps.push(ReorderStep::Selected { iteration, ou_id, rows: found.0.clone(), pairs: found.1.clone() });
                }
                found
            }
            None => {
                let rows: Vec<usize> = remaining.iter().take(h).collect();
                if trace {
                    steps.push(ReorderStep::Fallback { iteration, ou_id, rows: rows.clone() });
                }
                (rows, Vec::new())
            }
        };
        for &r in &rows {
            remaining.remove(r);
        }
        assignments.push(finalize_band(m, &rows, &pairs, shape, ou_id));
        iteration += 1;
    }

    let leftover_rows = remaining.to_vec();
    if !leftover_rows.is_empty() {
        let ou_id = assignments.len();
        let band = finalize_band(m, &leftover_rows, &[], shape, ou_id);
        if trace {
            steps.push(ReorderStep::Leftover { ou_id, rows: leftover_rows.clone(), padding: band.padding });
        }
        assignments.push(band);
    }
    SimilarityReordering { assignments, leftover_rows, trace: steps }
}

type Chained = (Vec<usize>, Vec<(usize, usize)>, Vec<(usize, usize, usize)>);
type PackedChained = (u128, Vec<(usize, usize)>, Vec<(usize, usize, usize)>);

/// Grow a chain from `seed` one closest pair at a time.
fn chain_stepwise(m: &BitMatrix, all_cols: &[usize], seed: (usize, usize), seed_rows: &[usize], h: usize) -> Chained {
    let (i, j) = seed;
    let mut cols: Vec<usize> = all_cols.iter().copied().filter(|&c| c != i && c != j).collect();
    let mut rows = RowMask::from_indices(m.rows(), seed_rows.iter().copied());
    let mut numrows = rows.count();
    let mut pairs = vec![(i, j)];
    let mut chained = Vec::new();
    while let Some((a, b, d)) = min_distance_pair_within(m, &cols, &rows, (numrows - h) as u32) {
        numrows -= d as usize;
        rows = m.agreeing_rows(a, b, &rows);
        cols.retain(|&c| c != a && c != b);
        pairs.push((a, b));
        chained.push((a, b, numrows));
    }
    (rows.to_vec(), pairs, chained)
}

/// [`chain_stepwise`] on packed columns. Zero-distance steps leave the rows
/// unchanged, so a whole run of them is the identical classes paired off in
/// order of their first member.
fn chain_packed(
    bits: &[u128],
    seed: (usize, usize),
    seed_rows: u128,
    h: usize,
) -> PackedChained {
    let (i, j) = seed;
    let mut alive: Vec<usize> = (0..bits.len()).filter(|&c| c != i && c != j).collect();
    let mut rows = seed_rows;
    let mut numrows = rows.count_ones() as usize;
    let mut pairs = vec![(i, j)];
    let mut chained = Vec::new();
    let mut used = vec![false; bits.len()];
    let mut order: Vec<(u128, usize)> = Vec::with_capacity(alive.len());
    let mut keys: Vec<u128> = Vec::with_capacity(alive.len());
    loop {
        order.clear();
        order.extend(alive.iter().map(|&c| (bits[c] & rows, c)));
        order.sort_unstable();
        let mut run: Vec<(usize, usize)> = order
            .chunk_by(|a, b| a.0 == b.0)
            .flat_map(|class| class.chunks_exact(2).map(|p| (p[0].1, p[1].1)))
            .collect();
        run.sort_unstable();
        for &(a, b) in &run {
            used[a] = true;
            used[b] = true;
            pairs.push((a, b));
            chained.push((a, b, numrows));
        }
        alive.retain(|&c| !used[c]);
        if numrows <= h || alive.len() < 2 {
            break;
        }

        // Every remaining pair now differs, so distance 1 is unbeatable.
        keys.clear();
        keys.extend(alive.iter().map(|&c| bits[c] & rows));
        let mut best: Option<(usize, usize, u32)> = None;
        let mut bound = (numrows - h) as u32;
        'scan: for (x, &ka) in keys.iter().enumerate() {
            for (y, &kb) in keys.iter().enumerate().skip(x + 1) {
                let d = (ka ^ kb).count_ones();
                if d < bound || (d == bound && best.is_none()) {
                    best = Some((x, y, d));
                    bound = d;
                    if d == 1 {
                        break 'scan;
                    }
                }
            }
        }
        let Some((x, y, d)) = best else { break };
        let (a, b) = (alive[x], alive[y]);
        rows &= !(bits[a] ^ bits[b]);
        numrows -= d as usize;
        used[a] = true;
        used[b] = true;
        alive.retain(|&c| c != a && c != b);
        pairs.push((a, b));
        chained.push((a, b, numrows));
    }
    (rows, pairs, chained)
}

fn pack(words: &[u64]) -> u128 {
    words.first().copied().unwrap_or(0) as u128 | (words.get(1).copied().unwrap_or(0) as u128) << 64
}

fn unpack(bits: u128) -> Vec<usize> {
    (0..128).filter(|&r| bits >> r & 1 == 1).collect()
}

/// Complete a band: drop columns that are all-zero on its rows, keep the
/// given identical pairs, and pair any further columns that are identical
/// on the band (lowest indices first). Whatever is left is a singleton.
pub fn finalize_band(
    m: &BitMatrix,
    rows: &[usize],
    pairs: &[(usize, usize)],
    shape: OuShape,
    ou_id: usize,
) -> OuAssignment {
    let mask = RowMask::from_indices(m.rows(), rows.iter().copied());
    let is_zero: Vec<bool> = (0..m.cols()).map(|c| m.column_ones(c, &mask) == 0).collect();
    let mut used = vec![false; m.cols()];
    let mut kept_pairs = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        debug_assert_eq!(m.masked_distance(a, b, &mask), 0, "pair ({a},{b}) differs on band rows");
        used[a] = true;
        used[b] = true;
        if !is_zero[a] {
            kept_pairs.push((a.min(b), a.max(b)));
        }
    }

    let mut classes: BTreeMap<Vec<u64>, Vec<usize>> = BTreeMap::new();
    for c in (0..m.cols()).filter(|&c| !used[c] && !is_zero[c]) {
        classes.entry(m.column_support(c, &mask).words().to_vec()).or_default().push(c);
    }
    let mut extra_pairs = Vec::new();
    let mut singletons = Vec::new();
    for members in classes.values() {
        for chunk in members.chunks(2) {
            match *chunk {
                [a, b] => extra_pairs.push((a, b)),
                [a] => singletons.push(a),
                _ => unreachable!(),
            }
        }
    }
    extra_pairs.sort_unstable();
    singletons.sort_unstable();
    kept_pairs.extend(extra_pairs);

    let mut sorted_rows = rows.to_vec();
    sorted_rows.sort_unstable();
    OuAssignment {
        ou_id,
        padding: shape.height.saturating_sub(rows.len()),
        rows: sorted_rows,
        pairs: kept_pairs,
        singletons,
        zero_columns: (0..m.cols()).filter(|&c| is_zero[c]).collect(),
    }
}
