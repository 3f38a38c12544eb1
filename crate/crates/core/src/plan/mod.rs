// SPDX-License-Identifier: Apache-2.0
//! Deployable crossbar programs.
//!
//! The weight matrix is cut into crossbar-sized tiles. Every tile is split
//! into its eight bit planes and plane `b` goes to Computation Unit `b`, so
//! all results read from one crossbar share the shift `2^b`. Each plane tile
//! is mapped independently, which gives it its own row routing.

mod format;
mod index;

pub use format::{PlanSummary, PlaneSummary, PLAN_MAGIC, PLAN_VERSION};
pub use index::{
    decode_output_indices, encode_output_indices, index_overhead_bits, routing_table_bits, shift_record_baseline_bits,
    DecodedIndices,
    OutputIndexStream, DELTA_BITS, SHIFT_RECORD_BITS,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitMatrix;
use crate::matrix::Matrix;
use crate::reorder::{map_plane, CompressedBand, MappingStrategy, OuShape};
use crate::tensor_io::QuantizedTensor;
use crate::{Error, Result, BITS};

/// Crossbar and OU dimensions plus ADC resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossbarGeometry {
    pub crossbar_rows: usize,
    pub crossbar_cols: usize,
    pub ou: OuShape,
    pub adc_bits: u32,
}

impl Default for CrossbarGeometry {
    fn default() -> Self {
        Self { crossbar_rows: 128, crossbar_cols: 128, ou: OuShape::default(), adc_bits: 3 }
    }
}

impl CrossbarGeometry {
    /// Geometry with the smallest ADC (at least 3 bits) that digitizes a full OU column.
    pub fn new(crossbar_rows: usize, crossbar_cols: usize, ou: OuShape) -> Result<Self> {
        let adc_bits = (usize::BITS - ou.height.leading_zeros()).max(3);
        let g = Self { crossbar_rows, crossbar_cols, ou, adc_bits };
        g.validate()?;
        Ok(g)
    }

    pub fn with_ou(self, ou: OuShape) -> Result<Self> {
        Self::new(self.crossbar_rows, self.crossbar_cols, ou)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ou.height == 0 || self.ou.width == 0 || self.ou.height > 128 {
            return Err(Error::InvalidArgument(format!("bad OU shape {}x{}", self.ou.height, self.ou.width)));
        }
        if self.ou.height > self.crossbar_rows || self.ou.width > self.crossbar_cols {
            return Err(Error::InvalidArgument(format!(
                "OU {}x{} larger than crossbar {}x{}",
                self.ou.height, self.ou.width, self.crossbar_rows, self.crossbar_cols
            )));
        }
        if self.crossbar_rows > u16::MAX as usize || self.crossbar_cols > 256 {
            return Err(Error::InvalidArgument(format!(
                "crossbar {}x{} exceeds the supported {}x256",
                self.crossbar_rows,
                self.crossbar_cols,
                u16::MAX
            )));
        }
        if self.adc_bits >= 32 || (self.ou.height as u64) >= 1u64 << self.adc_bits {
            return Err(Error::InvalidArgument(format!(
                "{}-bit ADC cannot digitize a {}-row partial sum",
                self.adc_bits, self.ou.height
            )));
        }
        Ok(())
    }

    /// OU row bands per crossbar.
    pub fn band_slots(&self) -> usize {
        self.crossbar_rows / self.ou.height
    }

    /// OU column groups per crossbar.
    pub fn column_groups(&self) -> usize {
        self.crossbar_cols / self.ou.width
    }

    /// Weight rows mapped onto one crossbar.
    pub fn tile_rows(&self) -> usize {
        self.band_slots() * self.ou.height
    }

    /// Weight columns mapped onto one crossbar.
    pub fn tile_cols(&self) -> usize {
        self.column_groups() * self.ou.width
    }

    /// Worst-case computation cycles of one crossbar.
    pub fn cycle_bound(&self) -> usize {
        BITS * self.band_slots() * self.column_groups()
    }
}

/// OU scheduling order inside a crossbar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Row band by row band; inputs are driven once per band and bit.
    #[default]
    Horizontal,
    /// Column group by column group; inputs reloaded every cycle, ADC muxes fixed.
    Vertical,
}

impl Direction {
    pub fn tag(self) -> u8 {
        match self {
            Direction::Horizontal => 0,
            Direction::Vertical => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Direction::Horizontal),
            1 => Ok(Direction::Vertical),
            t => Err(Error::Format(format!("unknown direction {t}"))),
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horizontal" => Ok(Direction::Horizontal),
            "vertical" => Ok(Direction::Vertical),
            other => Err(Error::InvalidArgument(format!("unknown direction '{other}'"))),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Horizontal => "horizontal",
            Direction::Vertical => "vertical",
        })
    }
}

impl std::fmt::Display for MappingStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MappingStrategy::Naive => "naive",
            MappingStrategy::ZeroSkip => "zero-skip",
            MappingStrategy::Similarity => "similarity",
        })
    }
}

/// Region of the weight matrix held by one crossbar of every CU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileSpec {
    pub row_start: usize,
    pub rows: usize,
    pub col_start: usize,
    pub cols: usize,
}

/// Row-major tiling of a `rows × cols` matrix.
pub fn tiles_for(rows: usize, cols: usize, geometry: &CrossbarGeometry) -> Vec<TileSpec> {
    let (tr, tc) = (geometry.tile_rows(), geometry.tile_cols());
    let mut out = Vec::new();
    for row_start in (0..rows).step_by(tr) {
        for col_start in (0..cols).step_by(tc) {
            out.push(TileSpec {
                row_start,
                rows: tr.min(rows - row_start),
                col_start,
                cols: tc.min(cols - col_start),
            });
        }
    }
    out
}

/// Mapping of one bit plane: one band list per tile, in tile order.
///
/// Row and column indices inside the bands are tile-local.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanePlan {
    pub plane: usize,
    pub tiles: Vec<Vec<CompressedBand>>,
}

impl PlanePlan {
    pub fn ou_count(&self) -> usize {
        self.tiles.iter().flatten().map(|b| b.ous.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossbarProgram {
    pub rows: usize,
    pub cols: usize,
    pub geometry: CrossbarGeometry,
    pub direction: Direction,
    pub strategy: MappingStrategy,
    pub tiles: Vec<TileSpec>,
    /// Indexed by plane; plane `b` runs on Computation Unit `b`.
    pub planes: Vec<PlanePlan>,
    /// Checksum of the weights the program was compiled from.
    pub weight_crc: u32,
}

impl CrossbarProgram {
    pub fn plane_shift(plane: usize) -> u32 {
        1 << plane
    }

    pub fn ou_count(&self) -> usize {
        self.planes.iter().map(PlanePlan::ou_count).sum()
    }

    /// OU activations for one input vector.
    pub fn ccq_per_vector(&self) -> u64 {
        (self.ou_count() * BITS) as u64
    }

    /// OU activations for one input vector with every tile fully stored.
    pub fn naive_ccq_per_vector(&self) -> u64 {
        naive_ccq(self.rows, self.cols, &self.geometry)
    }

    /// Reordered over naive OU activations; `None` for an empty matrix.
    pub fn compression_ratio(&self) -> Option<f64> {
        let base = self.naive_ccq_per_vector();
        (base > 0).then(|| self.ccq_per_vector() as f64 / base as f64)
    }

    pub fn set_direction(&mut self, direction: Direction) {
        self.direction = direction;
    }
}

/// Naive OU activations per vector: every tile cut into `h × w` OUs, all stored.
pub fn naive_ccq(rows: usize, cols: usize, geometry: &CrossbarGeometry) -> u64 {
    let h = geometry.ou.height;
    let w = geometry.ou.width;
    tiles_for(rows, cols, geometry)
        .iter()
        .map(|t| (t.rows.div_ceil(h) * t.cols.div_ceil(w) * BITS * BITS) as u64)
        .sum()
}

/// Checksum identifying a weight matrix.
pub fn weight_checksum(values: &Matrix<i8>) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(&(values.rows() as u32).to_le_bytes());
    h.update(&(values.cols() as u32).to_le_bytes());
    h.update(&values.as_slice().iter().map(|&v| v as u8).collect::<Vec<_>>());
    h.finalize()
}

/// Bit `plane` of a weight tile.
pub fn plane_tile(values: &Matrix<i8>, tile: &TileSpec, plane: usize) -> BitMatrix {
    BitMatrix::from_fn(tile.rows, tile.cols, |r, c| {
        (values.get(tile.row_start + r, tile.col_start + c) as u8) >> plane & 1 == 1
    })
}

/// Map every plane tile with `strategy` and assemble the program.
pub fn compile(
    tensor: &QuantizedTensor,
    geometry: CrossbarGeometry,
    strategy: MappingStrategy,
    direction: Direction,
) -> Result<CrossbarProgram> {
    geometry.validate()?;
    let values = tensor.values();
    let tiles = tiles_for(values.rows(), values.cols(), &geometry);
    let jobs: Vec<(usize, usize)> = (0..BITS).flat_map(|b| (0..tiles.len()).map(move |t| (b, t))).collect();
    let mapped: Vec<Vec<CompressedBand>> = jobs
        .par_iter()
        .map(|&(b, t)| map_plane(&plane_tile(values, &tiles[t], b), geometry.ou, strategy))
        .collect();
    let mut mapped = mapped.into_iter();
    let planes = (0..BITS)
        .map(|plane| PlanePlan { plane, tiles: mapped.by_ref().take(tiles.len()).collect() })
        .collect();
    build_program(values.rows(), values.cols(), planes, geometry, direction, strategy, weight_checksum(values))
}

/// Validate per-plane plans against the geometry and wrap them in a program.
pub fn build_program(
    rows: usize,
    cols: usize,
    planes: Vec<PlanePlan>,
    geometry: CrossbarGeometry,
    direction: Direction,
    strategy: MappingStrategy,
    weight_crc: u32,
) -> Result<CrossbarProgram> {
    geometry.validate()?;
    if planes.len() != BITS || planes.iter().enumerate().any(|(i, p)| p.plane != i) {
        return Err(Error::InvalidArgument(format!("expected plans for planes 0..{BITS} in order")));
    }
    let tiles = tiles_for(rows, cols, &geometry);
    let mut overflow = Vec::new();
    let mut details = Vec::new();
    for p in &planes {
        if p.tiles.len() != tiles.len() {
            return Err(Error::ShapeMismatch(format!(
                "plane {} has {} tiles, a {rows}x{cols} matrix needs {}",
                p.plane,
                p.tiles.len(),
                tiles.len()
            )));
        }
        for (t, bands) in p.tiles.iter().enumerate() {
            check_tile(bands, &tiles[t], &geometry).map_err(|e| Error::ShapeMismatch(format!("plane {}: {e}", p.plane)))?;
            let widest = bands.iter().map(|b| b.ous.len()).max().unwrap_or(0);
            if bands.len() > geometry.band_slots() || widest > geometry.column_groups() {
                overflow.push(p.plane);
                details.push(format!(
                    "plane {} tile {t}: {} bands x {widest} OUs, capacity {} x {}",
                    p.plane,
                    bands.len(),
                    geometry.band_slots(),
                    geometry.column_groups()
                ));
            }
        }
    }
    if !overflow.is_empty() {
        overflow.dedup();
        return Err(Error::Capacity { planes: overflow, detail: details.join("; ") });
    }
    Ok(CrossbarProgram { rows, cols, geometry, direction, strategy, tiles, planes, weight_crc })
}

fn check_tile(bands: &[CompressedBand], tile: &TileSpec, g: &CrossbarGeometry) -> std::result::Result<(), String> {
    for band in bands {
        if band.rows.len() > g.ou.height {
            return Err(format!("band with {} rows exceeds OU height {}", band.rows.len(), g.ou.height));
        }
        for ou in &band.ous {
            if ou.rows.len() > g.ou.height || ou.columns.len() > g.ou.width {
                return Err(format!("OU {}x{} exceeds {}x{}", ou.rows.len(), ou.columns.len(), g.ou.height, g.ou.width));
            }
            if ou.rows.iter().any(|&r| r >= tile.rows) {
                return Err("OU row outside its tile".into());
            }
            let mut bad = false;
            for c in &ou.columns {
                c.outputs.for_each(|o| bad |= o >= tile.cols);
                if ou.rows.len() < 128 && c.bits >> ou.rows.len() != 0 {
                    bad = true;
                }
            }
            if bad {
                return Err("OU column outside its tile".into());
            }
        }
    }
    Ok(())
}

/// Rebuild the signed weight matrix from the program's stored cells.
///
/// Fails when two stored cells disagree about the same weight bit or a
/// weight bit is claimed by no column although set elsewhere.
pub fn reconstruct_weights(program: &CrossbarProgram) -> Result<Matrix<i8>> {
    let mut bits: Vec<u8> = vec![0; program.rows * program.cols];
    for p in &program.planes {
        for (t, bands) in p.tiles.iter().enumerate() {
            let tile = &program.tiles[t];
            for band in bands {
                for ou in &band.ous {
                    for col in &ou.columns {
                        for (k, &r) in ou.rows.iter().enumerate() {
                            if col.bits >> k & 1 == 1 {
                                col.outputs.for_each(|c| {
                                    let idx = (tile.row_start + r) * program.cols + tile.col_start + c;
                                    bits[idx] |= 1 << p.plane;
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    let values = bits.into_iter().map(|b| b as i8).collect();
    Matrix::from_vec(program.rows, program.cols, values)
}

/// Total OU rows removed by compression, per plane.
pub fn removed_rows_per_plane(program: &CrossbarProgram) -> Vec<usize> {
    program.planes.iter().map(|p| p.tiles.iter().flatten().map(|b| b.removed_rows()).sum()).collect()
}
