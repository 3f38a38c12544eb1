// SPDX-License-Identifier: Apache-2.0
//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use oumap::bits::BitMatrix;
use oumap::matrix::Matrix;

/// Plain triple-loop signed product, `x (b × m) · w (m × n)`.
pub fn dense_matmul(x: &Matrix<i8>, w: &Matrix<i8>) -> Vec<i64> {
    let mut out = vec![0i64; x.rows() * w.cols()];
    for b in 0..x.rows() {
        for j in 0..w.cols() {
            let mut acc = 0i64;
            for k in 0..w.rows() {
                acc += x.get(b, k) as i64 * w.get(k, j) as i64;
            }
            out[b * w.cols() + j] = acc;
        }
    }
    out
}

pub fn column_on(m: &BitMatrix, c: usize, rows: &[usize]) -> Vec<bool> {
    rows.iter().map(|&r| m.get(r, c)).collect()
}

/// Stored columns of a band under the best possible pairing: zero columns
/// are dropped and each class of identical columns needs `⌈size/2⌉`.
pub fn band_stored(m: &BitMatrix, rows: &[usize]) -> usize {
    let mut classes: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    for c in 0..m.cols() {
        let col = column_on(m, c, rows);
        if col.iter().any(|&b| b) {
            *classes.entry(col).or_default() += 1;
        }
    }
    classes.values().map(|n| n.div_ceil(2)).sum()
}

/// Minimum of `cost(band)` summed over all partitions of `rows` into bands
/// of `h` rows (the last one possibly shorter).
pub fn best_partition(rows: &[usize], h: usize, cost: &dyn Fn(&[usize]) -> usize) -> usize {
    if rows.len() <= h {
        return cost(rows);
    }
    let first = rows[0];
    let rest = &rows[1..];
    let mut best = usize::MAX;
    // Bands are unordered, so the band holding the first row is chosen
    // first. A short band may only appear when `rows.len()` is not a multiple of `h`.
    let short = rows.len() % h;
    let mut sizes = vec![h];
    if short != 0 {
        sizes.push(short);
    }
    for size in sizes {
        for mask in 0u32..(1 << rest.len()) {
            if mask.count_ones() as usize != size - 1 {
                continue;
            }
            let mut band = vec![first];
            let mut others = Vec::new();
            for (i, &r) in rest.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    band.push(r);
                } else {
                    others.push(r);
                }
            }
            if size != h && others.len() % h != 0 {
                continue;
            }
            best = best.min(cost(&band) + best_partition(&others, h, cost));
        }
    }
    best
}

/// All partial matchings of `0..n`.
pub fn matchings(n: usize) -> Vec<Vec<(usize, usize)>> {
    fn go(free: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let Some((&first, rest)) = free.split_first() else {
            out.push(acc.clone());
            return;
        };
        go(rest, acc, out);
        for (i, &other) in rest.iter().enumerate() {
            let mut remaining = rest.to_vec();
            remaining.remove(i);
            acc.push((first, other));
            go(&remaining, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(&(0..n).collect::<Vec<_>>(), &mut Vec::new(), &mut out);
    out
}

/// Fewest stored columns on `rows` over every pairing of the non-zero
/// columns in which paired columns are identical.
pub fn best_pairing_stored(m: &BitMatrix, rows: &[usize]) -> usize {
    let nonzero: Vec<usize> = (0..m.cols()).filter(|&c| column_on(m, c, rows).iter().any(|&b| b)).collect();
    matchings(nonzero.len())
        .iter()
        .filter(|mt| mt.iter().all(|&(a, b)| column_on(m, nonzero[a], rows) == column_on(m, nonzero[b], rows)))
        .map(|mt| nonzero.len() - mt.len())
        .min()
        .unwrap_or(0)
}

/// Most OU rows removable by any ordering of `cols` cut into groups of `w`.
pub fn best_grouping_removed(m: &BitMatrix, band: &[usize], cols: &[usize], w: usize) -> usize {
    fn permute(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, visit);
            items.swap(k, i);
        }
    }
    let mut best = 0;
    let mut items = cols.to_vec();
    permute(&mut items, 0, &mut |order| {
        let removed: usize = order
            .chunks(w)
            .map(|group| band.iter().filter(|&&r| group.iter().all(|&c| !m.get(r, c))).count())
            .sum();
        best = best.max(removed);
    });
    best
}

/// Crossbar cells needed by the best band partition of an `m`-row plane
/// with bands of `h` rows, relative to storing every column in full.
pub fn best_cell_ratio(m: &BitMatrix, h: usize) -> f64 {
    let rows: Vec<usize> = (0..m.rows()).collect();
    let bands = m.rows().div_ceil(h);
    let stored = best_partition(&rows, h, &|band| band_stored(m, band));
    (stored * h) as f64 / (bands * h * m.cols()) as f64
}

pub fn random_bits(rows: usize, cols: usize, density: f64, rng: &mut impl rand::Rng) -> BitMatrix {
    BitMatrix::from_fn(rows, cols, |_, _| rng.random_bool(density))
}
