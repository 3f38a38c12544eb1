// SPDX-License-Identifier: Apache-2.0
//! Functional, cycle-counted execution of a [`CrossbarProgram`].
//!
//! A cycle drives one input bit onto the active rows of one OU and
//! digitizes every stored column. Each digitized partial sum is shifted by
//! the input bit position and added or subtracted into every output it
//! stands for; a repetitive column is converted once and written to both of
//! its output registers. Per-plane results are finally combined with the
//! plane shift `2^b`.
//!
//! Every input bit is processed, so the schedule, and therefore the trace,
//! does not depend on activation values.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{PartialSumLedger, ShiftOp};
use crate::matrix::Matrix;
use crate::plan::{encode_output_indices, reconstruct_weights, weight_checksum, CrossbarProgram, Direction, DELTA_BITS};
use crate::{Error, Result, BITS};

/// One computation cycle of one crossbar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub plane: u8,
    pub tile: u32,
    /// Band position in the tile's band list.
    pub band: u32,
    /// OU column group inside the band.
    pub ou: u16,
    pub input_bit: u8,
    pub rows_activated: u16,
    /// Word lines driven by DACs this cycle (zero when the band input is reused).
    pub dac_drives: u16,
    pub adc_conversions: u16,
    /// Whether the ADC muxes moved to another column group for this cycle.
    pub adc_switch: bool,
    /// Output index bits read to route the results.
    pub readout_bits: u32,
    pub shift_adds: u16,
    pub shift_subtracts: u16,
    pub buffer_accesses: u32,
}

/// Schedule executed for every input vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub direction: Direction,
    pub vectors: usize,
    pub cycles: Vec<CycleRecord>,
}

impl ExecutionTrace {
    /// Cycles spent by each `(plane, tile)` crossbar on one vector.
    pub fn cycles_per_crossbar(&self) -> std::collections::BTreeMap<(u8, u32), usize> {
        let mut out = std::collections::BTreeMap::new();
        for c in &self.cycles {
            *out.entry((c.plane, c.tile)).or_insert(0) += 1;
        }
        out
    }

    /// Longest crossbar schedule; crossbars run concurrently.
    pub fn latency_cycles(&self) -> usize {
        self.cycles_per_crossbar().values().copied().max().unwrap_or(0)
    }

    /// One JSON object per cycle.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        for c in &self.cycles {
            serde_json::to_writer(&mut w, c).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    /// `batch × cols` signed accumulators.
    pub output: Matrix<i64>,
    pub trace: ExecutionTrace,
}

/// Counts per component class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Events {
    pub ou_activations: u64,
    pub dac_drives: u64,
    pub adc_conversions: u64,
    pub adc_switches: u64,
    pub readout_bits: u64,
    pub shift_adds: u64,
    pub shift_subtracts: u64,
    pub buffer_accesses: u64,
}

impl Events {
    fn add_cycle(&mut self, c: &CycleRecord, times: u64) {
        self.ou_activations += times;
        self.dac_drives += c.dac_drives as u64 * times;
        self.adc_conversions += c.adc_conversions as u64 * times;
        self.adc_switches += c.adc_switch as u64 * times;
        self.readout_bits += c.readout_bits as u64 * times;
        self.shift_adds += c.shift_adds as u64 * times;
        self.shift_subtracts += c.shift_subtracts as u64 * times;
        self.buffer_accesses += c.buffer_accesses as u64 * times;
    }

    pub fn scaled(&self, k: u64) -> Events {
        Events {
            ou_activations: self.ou_activations * k,
            dac_drives: self.dac_drives * k,
            adc_conversions: self.adc_conversions * k,
            adc_switches: self.adc_switches * k,
            readout_bits: self.readout_bits * k,
            shift_adds: self.shift_adds * k,
            shift_subtracts: self.shift_subtracts * k,
            buffer_accesses: self.buffer_accesses * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTally {
    pub per_plane: Vec<Events>,
    pub total: Events,
}

/// Event counts over all vectors of the trace.
pub fn count_events(trace: &ExecutionTrace) -> EventTally {
    let mut per_plane = vec![Events::default(); BITS];
    let mut total = Events::default();
    let n = trace.vectors as u64;
    for c in &trace.cycles {
        per_plane[c.plane as usize].add_cycle(c, n);
        total.add_cycle(c, n);
    }
    EventTally { per_plane, total }
}

/// Cycle order of `program` under `direction`.
pub fn schedule(program: &CrossbarProgram, direction: Direction) -> Vec<CycleRecord> {
    let mut out = Vec::new();
    for plan in &program.planes {
        let plane = plan.plane;
        for (t, bands) in plan.tiles.iter().enumerate() {
            let mut last_group: Option<usize> = None;
            let mut emit = |band: usize, slot: usize, bit: usize, dac: usize| {
                let ou = &bands[band].ous[slot];
                let indices = ou.index_count();
                let op = ShiftOp::for_cycle(bit, plane);
                let (adds, subs) = match op {
                    ShiftOp::Add => (indices, 0),
                    ShiftOp::Subtract => (0, indices),
                };
                let switch = last_group.is_some_and(|g| g != slot);
                last_group = Some(slot);
                out.push(CycleRecord {
                    plane: plane as u8,
                    tile: t as u32,
                    band: band as u32,
                    ou: slot as u16,
                    input_bit: bit as u8,
                    rows_activated: ou.rows.len() as u16,
                    dac_drives: dac as u16,
                    adc_conversions: ou.columns.len() as u16,
                    adc_switch: switch,
                    readout_bits: (encode_output_indices(ou).len() as u64 * DELTA_BITS) as u32,
                    shift_adds: adds as u16,
                    shift_subtracts: subs as u16,
                    buffer_accesses: (indices + usize::from(dac > 0)) as u32,
                });
            };
            match direction {
                Direction::Horizontal => {
                    for (b, band) in bands.iter().enumerate() {
                        let mut driven = std::collections::BTreeSet::new();
                        for ou in &band.ous {
                            driven.extend(ou.rows.iter().copied());
                        }
                        for bit in 0..BITS {
                            for slot in 0..band.ous.len() {
                                emit(b, slot, bit, if slot == 0 { driven.len() } else { 0 });
                            }
                        }
                    }
                }
                Direction::Vertical => {
                    let groups = bands.iter().map(|b| b.ous.len()).max().unwrap_or(0);
                    for slot in 0..groups {
                        for (b, band) in bands.iter().enumerate() {
                            if slot < band.ous.len() {
                                for bit in 0..BITS {
                                    emit(b, slot, bit, band.ous[slot].rows.len());
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Run `activations` (`batch × rows`) through `program`.
pub fn simulate(program: &CrossbarProgram, activations: &Matrix<i8>, direction: Direction) -> Result<SimOutput> {
    if activations.cols() != program.rows {
        return Err(Error::ShapeMismatch(format!(
            "activations have {} features, program expects {}",
            activations.cols(),
            program.rows
        )));
    }
    let computed = weight_checksum(&reconstruct_weights(program)?);
    if computed != program.weight_crc {
        return Err(Error::Checksum { stored: program.weight_crc, computed });
    }
    let cycles = schedule(program, direction);
    let batch = activations.rows();
    let cols = program.cols;
    let adc_limit = 1u32 << program.geometry.adc_bits;

    let per_plane: Vec<Result<Vec<i64>>> = (0..BITS)
        .into_par_iter()
        .map(|plane| {
            let mut ledger = PartialSumLedger::new(batch * cols);
            for rec in cycles.iter().filter(|c| c.plane as usize == plane) {
                let tile = &program.tiles[rec.tile as usize];
                let ou = &program.planes[plane].tiles[rec.tile as usize][rec.band as usize].ous[rec.ou as usize];
                let bit = rec.input_bit as usize;
                let op = ShiftOp::for_cycle(bit, plane);
                for v in 0..batch {
                    let x = activations.row(v);
                    let mut drive = 0u128;
                    for (k, &r) in ou.rows.iter().enumerate() {
                        if (x[tile.row_start + r] as u8) >> bit & 1 == 1 {
                            drive |= 1 << k;
                        }
                    }
                    for col in &ou.columns {
                        let partial = (drive & col.bits).count_ones();
                        if partial >= adc_limit {
                            return Err(Error::InvalidArgument(format!(
                                "partial sum {partial} overflows the {}-bit ADC",
                                program.geometry.adc_bits
                            )));
                        }
                        if partial != 0 {
                            col.outputs.for_each(|c| ledger.accumulate(v * cols + tile.col_start + c, partial, bit, op));
                        }
                    }
                }
            }
            Ok(ledger.into_values())
        })
        .collect();

    let mut acc = vec![0i64; batch * cols];
    for (plane, values) in per_plane.into_iter().enumerate() {
        for (a, v) in acc.iter_mut().zip(values?) {
            *a += v << plane;
        }
    }
    Ok(SimOutput {
        output: Matrix::from_vec(batch, cols, acc)?,
        trace: ExecutionTrace { direction, vectors: batch, cycles },
    })
}
