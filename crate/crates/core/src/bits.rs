// SPDX-License-Identifier: Apache-2.0
//! Packed binary matrices.
//!
//! A [`BitMatrix`] is stored column-major, 64 rows per word, because every
//! hot operation in the reordering engine is a column-vs-column comparison
//! restricted to a subset of rows ([`RowMask`]).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const WORD: usize = 64;

#[inline]
const fn words_for(rows: usize) -> usize {
    rows.div_ceil(WORD)
}

/// Subset of the rows of a [`BitMatrix`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RowMask {
    len: usize,
    words: Vec<u64>,
}

impl RowMask {
    pub fn empty(len: usize) -> Self {
        Self { len, words: vec![0; words_for(len)] }
    }

    pub fn full(len: usize) -> Self {
        let mut m = Self::empty(len);
        for (i, w) in m.words.iter_mut().enumerate() {
            let remaining = len - i * WORD;
            *w = if remaining >= WORD { u64::MAX } else { (1u64 << remaining) - 1 };
        }
        m
    }

    pub fn from_indices(len: usize, rows: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Self::empty(len);
        for r in rows {
            m.insert(r);
        }
        m
    }

    #[inline]
    pub fn universe(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn contains(&self, r: usize) -> bool {
        self.words[r / WORD] >> (r % WORD) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, r: usize) {
        assert!(r < self.len, "row {r} outside mask of {} rows", self.len);
        self.words[r / WORD] |= 1 << (r % WORD);
    }

    #[inline]
    pub fn remove(&mut self, r: usize) {
        self.words[r / WORD] &= !(1 << (r % WORD));
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Member rows in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * WORD + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Rows of `self` not present in `other`.
    pub fn difference(&self, other: &RowMask) -> RowMask {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect();
        RowMask { len: self.len, words }
    }
}

/// Dense 0/1 matrix with row and column labels.
///
/// Labels carry the original indices through submatrix extraction: the bit
/// content is never modified by reordering, only re-indexed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_col: usize,
    data: Vec<u64>,
    row_labels: Vec<usize>,
    col_labels: Vec<usize>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_col = words_for(rows);
        Self {
            rows,
            cols,
            words_per_col,
            data: vec![0; words_per_col * cols],
            row_labels: (0..rows).collect(),
            col_labels: (0..cols).collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                if f(r, c) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// Build from row slices of 0/1 values.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::LengthMismatch { expected: cols, actual: r.len() });
            }
            if let Some(&v) = r.iter().find(|&&v| v > 1) {
                return Err(Error::InvalidArgument(format!("bit value {v} is not 0 or 1")));
            }
        }
        Ok(Self::from_fn(rows.len(), cols, |r, c| rows[r].as_ref()[c] == 1))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[c * self.words_per_col + r / WORD] >> (r % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.data[c * self.words_per_col + r / WORD];
        if v {
            *w |= 1 << (r % WORD);
        } else {
            *w &= !(1 << (r % WORD));
        }
    }

    /// Packed words of column `c`; bit `r % 64` of word `r / 64` is row `r`.
    #[inline]
    pub fn column(&self, c: usize) -> &[u64] {
        &self.data[c * self.words_per_col..(c + 1) * self.words_per_col]
    }

    pub fn row_labels(&self) -> &[usize] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[usize] {
        &self.col_labels
    }

    pub fn with_labels(mut self, row_labels: Vec<usize>, col_labels: Vec<usize>) -> Result<Self> {
        if row_labels.len() != self.rows {
            return Err(Error::LengthMismatch { expected: self.rows, actual: row_labels.len() });
        }
        if col_labels.len() != self.cols {
            return Err(Error::LengthMismatch { expected: self.cols, actual: col_labels.len() });
        }
        self.row_labels = row_labels;
        self.col_labels = col_labels;
        Ok(self)
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of set bits of column `c` on the rows in `mask`.
    pub fn column_ones(&self, c: usize, mask: &RowMask) -> u32 {
        self.column(c).iter().zip(mask.words()).map(|(a, m)| (a & m).count_ones()).sum()
    }

    /// Rows of `mask` where column `c` is set.
    pub fn column_support(&self, c: usize, mask: &RowMask) -> RowMask {
        let words = self.column(c).iter().zip(mask.words()).map(|(a, m)| a & m).collect();
        RowMask { len: self.rows, words }
    }

    /// Rows of `mask` where columns `a` and `b` agree.
    pub fn agreeing_rows(&self, a: usize, b: usize, mask: &RowMask) -> RowMask {
        let words = self
            .column(a)
            .iter()
            .zip(self.column(b))
            .zip(mask.words())
            .map(|((x, y), m)| !(x ^ y) & m)
            .collect();
        RowMask { len: self.rows, words }
    }

    /// Hamming distance between columns `a` and `b` restricted to `mask`.
    #[inline]
    pub fn masked_distance(&self, a: usize, b: usize, mask: &RowMask) -> u32 {
        self.column(a)
            .iter()
            .zip(self.column(b))
            .zip(mask.words())
            .map(|((x, y), m)| ((x ^ y) & m).count_ones())
            .sum()
    }

    /// Extract the given rows and columns, in the given order, carrying labels.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(rows.len(), cols.len());
        for (nc, &c) in cols.iter().enumerate() {
            for (nr, &r) in rows.iter().enumerate() {
                if self.get(r, c) {
                    out.set(nr, nc, true);
                }
            }
        }
        out.row_labels = rows.iter().map(|&r| self.row_labels[r]).collect();
        out.col_labels = cols.iter().map(|&c| self.col_labels[c]).collect();
        out
    }

    /// Column `c` restricted to `mask`, as a dense `Vec<bool>` in row order.
    pub fn column_bits(&self, c: usize, mask: &RowMask) -> Vec<bool> {
        mask.iter().map(|r| self.get(r, c)).collect()
    }
}
