// SPDX-License-Identifier: Apache-2.0
//! Bit-level similarity reordering.
//!
//! A bit plane is cut into *bands* of `h` rows (one OU row each). Rows are
//! chosen so that many column pairs are bit-identical on the band; only one
//! column of such a pair is stored and its result is fanned out to both
//! outputs. Columns that are all-zero on a band are not stored at all.
//! Finally [`compress_rows`] groups the stored columns into OUs of width `w`
//! and removes OU rows that are zero across the whole OU.

mod compress;
mod pairing;
mod similarity;

pub use compress::{compress_rows, ColumnOutputs, CompressedBand, PlacedOu, RowCompression, StoredColumn};
pub use pairing::{column_pair, min_distance_pair, shd, ColumnPairDict, ColumnPairEntry};
pub use similarity::{finalize_band, reorder_similarity, ReorderStep, SimilarityReordering};

use serde::{Deserialize, Serialize};

use crate::bits::BitMatrix;
use crate::{Error, Result};

/// OU dimensions in cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OuShape {
    pub height: usize,
    pub width: usize,
}

impl OuShape {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!("OU shape {height}x{width} must be non-empty")));
        }
        if height > 128 {
            return Err(Error::InvalidArgument(format!("OU height {height} exceeds 128 rows")));
        }
        Ok(Self { height, width })
    }
}

impl Default for OuShape {
    fn default() -> Self {
        Self { height: 7, width: 8 }
    }
}

/// How a bit plane is laid out on OUs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingStrategy {
    /// Consecutive row bands, every column stored, no compression.
    Naive,
    /// Consecutive row bands, all-zero band columns skipped, OU row compression.
    ZeroSkip,
    /// Similarity reordering, identical-pair sharing, OU row compression.
    Similarity,
}

impl MappingStrategy {
    pub fn tag(self) -> u8 {
        match self {
            MappingStrategy::Naive => 0,
            MappingStrategy::ZeroSkip => 1,
            MappingStrategy::Similarity => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(MappingStrategy::Naive),
            1 => Ok(MappingStrategy::ZeroSkip),
            2 => Ok(MappingStrategy::Similarity),
            t => Err(Error::Format(format!("unknown mapping strategy {t}"))),
        }
    }
}

impl std::str::FromStr for MappingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(MappingStrategy::Naive),
            "zero-skip" => Ok(MappingStrategy::ZeroSkip),
            "similarity" => Ok(MappingStrategy::Similarity),
            other => Err(Error::InvalidArgument(format!("unknown strategy '{other}'"))),
        }
    }
}

/// One OU row band: the rows it activates and how its columns are stored.
///
/// Row and column indices are positions in the bit matrix the band was
/// computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OuAssignment {
    pub ou_id: usize,
    /// Selected rows, ascending; at most the OU height.
    pub rows: Vec<usize>,
    /// Column pairs bit-identical on `rows`; each stored once.
    pub pairs: Vec<(usize, usize)>,
    /// Non-zero columns without a partner, stored individually.
    pub singletons: Vec<usize>,
    /// Columns that are all-zero on `rows` and need no storage.
    pub zero_columns: Vec<usize>,
    /// Inactive padding rows (`height − rows.len()`).
    pub padding: usize,
}

impl OuAssignment {
    /// Physical columns this band needs.
    pub fn stored_columns(&self) -> usize {
        self.pairs.len() + self.singletons.len()
    }
}

/// Band layout of one bit plane under `strategy`.
pub fn assign_bands(m: &BitMatrix, shape: OuShape, strategy: MappingStrategy) -> Vec<OuAssignment> {
    match strategy {
        MappingStrategy::Similarity => reorder_similarity(m, shape, false).assignments,
        MappingStrategy::Naive | MappingStrategy::ZeroSkip => {
            let all_cols: Vec<usize> = (0..m.cols()).collect();
            (0..m.rows())
                .step_by(shape.height.max(1))
                .enumerate()
                .map(|(ou_id, start)| {
                    let rows: Vec<usize> = (start..(start + shape.height).min(m.rows())).collect();
                    let padding = shape.height - rows.len();
                    if strategy == MappingStrategy::Naive {
                        OuAssignment {
                            ou_id,
                            rows,
                            pairs: Vec::new(),
                            singletons: all_cols.clone(),
                            zero_columns: Vec::new(),
                            padding,
                        }
                    } else {
                        let mask = crate::bits::RowMask::from_indices(m.rows(), rows.iter().copied());
                        let (zero_columns, singletons) =
                            all_cols.iter().partition(|&&c| m.column_ones(c, &mask) == 0);
                        OuAssignment { ou_id, rows, pairs: Vec::new(), singletons, zero_columns, padding }
                    }
                })
                .collect()
        }
    }
}

/// Full mapping of one bit plane: band assignment followed by row compression.
pub fn map_plane(m: &BitMatrix, shape: OuShape, strategy: MappingStrategy) -> Vec<CompressedBand> {
    let bands = assign_bands(m, shape, strategy);
    let mode = match strategy {
        MappingStrategy::Naive => RowCompression::Disabled,
        _ => RowCompression::Enabled,
    };
    compress_rows(m, &bands, shape, mode)
}
