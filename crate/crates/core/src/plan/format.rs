// SPDX-License-Identifier: Apache-2.0
//! `OUPL` plan files and their JSON summary.
//!
//! All integers little-endian:
//!
//! ```text
//! "OUPL" u16 version
//! u32 rows  u32 cols
//! u16 crossbar_rows  u16 crossbar_cols  u8 ou_height  u16 ou_width  u8 adc_bits
//! u8 direction  u8 strategy  u32 weight_crc
//! for plane 0..8, for tile (row-major):
//!   u16 bands
//!   per band: u32 ou_id  u8 n  u16 rows[n]  u8 padding  u16 ous
//!     per OU: u8 a  u16 routing[a]  u8 pairs  u16 len  u8 deltas[len]
//!             u128 column_bits[len − pairs]
//! u32 crc32 of everything above
//! ```
//!
//! Row indices are tile-local; column bit `k` is the cell on routing row `k`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    build_program, decode_output_indices, encode_output_indices, index_overhead_bits, shift_record_baseline_bits,
    CrossbarGeometry, CrossbarProgram, Direction, OutputIndexStream, PlanePlan,
};
use crate::reorder::{CompressedBand, MappingStrategy, OuShape, PlacedOu, StoredColumn};
use crate::{Error, Result, BITS};

pub const PLAN_MAGIC: [u8; 4] = *b"OUPL";
pub const PLAN_VERSION: u16 = 1;

impl CrossbarProgram {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&PLAN_MAGIC);
        out.extend_from_slice(&PLAN_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        let g = &self.geometry;
        out.extend_from_slice(&(g.crossbar_rows as u16).to_le_bytes());
        out.extend_from_slice(&(g.crossbar_cols as u16).to_le_bytes());
        out.push(g.ou.height as u8);
        out.extend_from_slice(&(g.ou.width as u16).to_le_bytes());
        out.push(g.adc_bits as u8);
        out.push(self.direction.tag());
        out.push(self.strategy.tag());
        out.extend_from_slice(&self.weight_crc.to_le_bytes());
        for plane in &self.planes {
            for bands in &plane.tiles {
                out.extend_from_slice(&(bands.len() as u16).to_le_bytes());
                for band in bands {
                    out.extend_from_slice(&(band.ou_id as u32).to_le_bytes());
                    out.push(band.rows.len() as u8);
                    for &r in &band.rows {
                        out.extend_from_slice(&(r as u16).to_le_bytes());
                    }
                    out.push(band.padding as u8);
                    out.extend_from_slice(&(band.ous.len() as u16).to_le_bytes());
                    for ou in &band.ous {
                        out.push(ou.rows.len() as u8);
                        for &r in &ou.rows {
                            out.extend_from_slice(&(r as u16).to_le_bytes());
                        }
                        let stream = encode_output_indices(ou);
                        out.push(stream.repetitive as u8);
                        out.extend_from_slice(&(stream.len() as u16).to_le_bytes());
                        out.extend_from_slice(&stream.deltas);
                        for c in &ou.columns {
                            out.extend_from_slice(&c.bits.to_le_bytes());
                        }
                    }
                }
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < PLAN_MAGIC.len() + 6 || bytes[..4] != PLAN_MAGIC {
            return Err(Error::Format("not an OUPL plan file".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        let mut r = Reader { buf: body, pos: 4 };
        let version = r.u16()?;
        if version != PLAN_VERSION {
            return Err(Error::Format(format!("unsupported plan version {version}")));
        }
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let crossbar_rows = r.u16()? as usize;
        let crossbar_cols = r.u16()? as usize;
        let ou_h = r.u8()? as usize;
        let ou_w = r.u16()? as usize;
        let adc_bits = r.u8()? as u32;
        let direction = Direction::from_tag(r.u8()?)?;
        let strategy = MappingStrategy::from_tag(r.u8()?)?;
        let weight_crc = r.u32()?;
        let geometry = CrossbarGeometry { crossbar_rows, crossbar_cols, ou: OuShape::new(ou_h, ou_w)?, adc_bits };
        geometry.validate()?;
        let n_tiles = super::tiles_for(rows, cols, &geometry).len();
        let mut planes = Vec::with_capacity(BITS);
        for plane in 0..BITS {
            let mut tiles = Vec::with_capacity(n_tiles);
            for _ in 0..n_tiles {
                let n_bands = r.u16()? as usize;
                let mut bands = Vec::with_capacity(n_bands);
                for _ in 0..n_bands {
                    let ou_id = r.u32()? as usize;
                    let n = r.u8()? as usize;
                    let band_rows = (0..n).map(|_| r.u16().map(usize::from)).collect::<Result<Vec<_>>>()?;
                    let padding = r.u8()? as usize;
                    let n_ous = r.u16()? as usize;
                    let mut ous = Vec::with_capacity(n_ous);
                    for _ in 0..n_ous {
                        let a = r.u8()? as usize;
                        let ou_rows = (0..a).map(|_| r.u16().map(usize::from)).collect::<Result<Vec<_>>>()?;
                        let repetitive = r.u8()? as usize;
                        let len = r.u16()? as usize;
                        let deltas = r.bytes(len)?.to_vec();
                        let decoded = decode_output_indices(&OutputIndexStream { repetitive, deltas })?;
                        let columns = decoded
                            .outputs()
                            .into_iter()
                            .map(|outputs| Ok(StoredColumn { outputs, bits: r.u128()? }))
                            .collect::<Result<Vec<_>>>()?;
                        ous.push(PlacedOu { rows: ou_rows, columns });
                    }
                    bands.push(CompressedBand { ou_id, rows: band_rows, padding, ous });
                }
                tiles.push(bands);
            }
            planes.push(PlanePlan { plane, tiles });
        }
        if r.pos != body.len() {
            return Err(Error::Format(format!("{} trailing bytes in plan", body.len() - r.pos)));
        }
        build_program(rows, cols, planes, geometry, direction, strategy, weight_crc)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn summary(&self) -> PlanSummary {
        let planes = self
            .planes
            .iter()
            .map(|p| {
                let bands: Vec<&CompressedBand> = p.tiles.iter().flatten().collect();
                let ous: Vec<&PlacedOu> = bands.iter().flat_map(|b| b.ous.iter()).collect();
                PlaneSummary {
                    plane: p.plane,
                    bands: bands.len(),
                    ous: ous.len(),
                    stored_columns: ous.iter().map(|o| o.columns.len()).sum(),
                    repetitive_pairs: ous.iter().map(|o| o.repetitive()).sum(),
                    active_rows: ous.iter().map(|o| o.rows.len()).sum(),
                    removed_rows: bands.iter().map(|b| b.removed_rows()).sum(),
                }
            })
            .collect();
        PlanSummary {
            rows: self.rows,
            cols: self.cols,
            geometry: self.geometry,
            direction: self.direction,
            strategy: self.strategy,
            tiles: self.tiles.len(),
            weight_crc: self.weight_crc,
            ous: self.ou_count(),
            ccq_per_vector: self.ccq_per_vector(),
            naive_ccq_per_vector: self.naive_ccq_per_vector(),
            compression_ratio: self.compression_ratio(),
            index_overhead_bits: index_overhead_bits(self),
            shift_record_baseline_bits: shift_record_baseline_bits(self),
            planes,
        }
    }
}

/// Human-readable digest of a plan, written next to the binary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub rows: usize,
    pub cols: usize,
    pub geometry: CrossbarGeometry,
    pub direction: Direction,
    pub strategy: MappingStrategy,
    pub tiles: usize,
    pub weight_crc: u32,
    pub ous: usize,
    pub ccq_per_vector: u64,
    pub naive_ccq_per_vector: u64,
    pub compression_ratio: Option<f64>,
    pub index_overhead_bits: u64,
    pub shift_record_baseline_bits: u64,
    pub planes: Vec<PlaneSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneSummary {
    pub plane: usize,
    pub bands: usize,
    pub ous: usize,
    pub stored_columns: usize,
    pub repetitive_pairs: usize,
    pub active_rows: usize,
    pub removed_rows: usize,
}

impl PlanSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format("truncated plan file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.bytes(16)?.try_into().unwrap()))
    }
}
