// SPDX-License-Identifier: Apache-2.0
//! Energy, CCQ and performance accounting.
//!
//! Energy of a component class is `events × power × clock period`; with
//! power in mW and the period in ns this is pJ, reported here in nJ.
//! Performance is `1 / (CCQ × EC)` with CCQ the number of OU activations
//! and EC the total energy in nJ.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::plan::{
    compile, index_overhead_bits, routing_table_bits, shift_record_baseline_bits, CrossbarGeometry, CrossbarProgram,
    Direction,
};
use crate::reorder::{MappingStrategy, OuShape};
use crate::sim::{count_events, simulate, Events, ExecutionTrace};
use crate::synthetic::{pruned_gaussian, uniform_i8};
use crate::tensor_io::QuantizedTensor;
use crate::{Error, Result};

/// Component power in mW at the given clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub dac_mw: f64,
    pub adc_mw: f64,
    pub readout_mw: f64,
    pub shift_add_mw: f64,
    pub buffer_mw: f64,
    pub pe_controller_mw: f64,
    pub adc_switch_mw: f64,
    pub clock_ghz: f64,
}

impl Default for PowerTable {
    fn default() -> Self {
        Self {
            dac_mw: 0.049,
            adc_mw: 6.05,
            readout_mw: 0.2,
            shift_add_mw: 7.29,
            buffer_mw: 4.2,
            pe_controller_mw: 0.48,
            adc_switch_mw: 0.049,
            clock_ghz: 1.2,
        }
    }
}

impl PowerTable {
    pub const KEYS: [&'static str; 8] = [
        "dac_mw",
        "adc_mw",
        "readout_mw",
        "shift_add_mw",
        "buffer_mw",
        "pe_controller_mw",
        "adc_switch_mw",
        "clock_ghz",
    ];

    pub fn period_ns(&self) -> f64 {
        1.0 / self.clock_ghz
    }

    fn field(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "dac_mw" => &mut self.dac_mw,
            "adc_mw" => &mut self.adc_mw,
            "readout_mw" => &mut self.readout_mw,
            "shift_add_mw" => &mut self.shift_add_mw,
            "buffer_mw" => &mut self.buffer_mw,
            "pe_controller_mw" => &mut self.pe_controller_mw,
            "adc_switch_mw" => &mut self.adc_switch_mw,
            "clock_ghz" => &mut self.clock_ghz,
            _ => return None,
        })
    }

    /// Defaults overridden by `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Self::default();
        for (key, value) in parse_key_values(text)? {
            let slot = t.field(&key).ok_or_else(|| Error::InvalidArgument(format!("unknown power key '{key}'")))?;
            *slot = value.parse().map_err(|_| Error::InvalidArgument(format!("bad number for {key}: '{value}'")))?;
        }
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let mut t = *self;
        for key in Self::KEYS {
            let v = *t.field(key).unwrap();
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{key} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `key = value` pairs, one per line. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("line {}: expected key = value", n + 1)))?;
        let k = k.trim();
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(Error::InvalidArgument(format!("line {}: duplicate key '{k}'", n + 1)));
        }
    }
    Ok(out)
}

/// Energy per component class, nJ.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dac: f64,
    pub adc: f64,
    pub readout: f64,
    pub shift_add: f64,
    pub buffer: f64,
    pub adc_switch: f64,
    pub pe_controller: f64,
    /// Row routing tables read once per input vector.
    pub index_storage: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.dac
            + self.adc
            + self.readout
            + self.shift_add
            + self.buffer
            + self.adc_switch
            + self.pe_controller
            + self.index_storage
    }
}

/// Energy of the given event counts plus `index_bits_read` routing-table bits.
pub fn energy_from_events(e: &Events, index_bits_read: u64, p: &PowerTable) -> EnergyBreakdown {
    let nj = |count: u64, mw: f64| count as f64 * mw * p.period_ns() / 1000.0;
    EnergyBreakdown {
        dac: nj(e.dac_drives, p.dac_mw),
        adc: nj(e.adc_conversions, p.adc_mw),
        readout: nj(e.readout_bits, p.readout_mw),
        shift_add: nj(e.shift_adds + e.shift_subtracts, p.shift_add_mw),
        buffer: nj(e.buffer_accesses, p.buffer_mw),
        adc_switch: nj(e.adc_switches, p.adc_switch_mw),
        pe_controller: nj(e.ou_activations, p.pe_controller_mw),
        index_storage: nj(index_bits_read, p.readout_mw),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub strategy: MappingStrategy,
    pub direction: Direction,
    pub vectors: usize,
    /// OU activations over all vectors.
    pub ccq: u64,
    /// OU activations with naive packing over all vectors.
    pub naive_ccq: u64,
    /// Cycles summed over all crossbars and vectors.
    pub cycles: u64,
    /// Cycles of the busiest crossbar for one vector.
    pub latency_cycles: u64,
    pub events: Events,
    pub energy_nj: EnergyBreakdown,
    pub total_energy_nj: f64,
    pub compression_ratio: Option<f64>,
    pub performance: Option<f64>,
    pub index_overhead_bits: u64,
    pub shift_record_baseline_bits: u64,
}

/// `1 / (CCQ × EC)`, absent when either factor is zero.
pub fn performance(ccq: u64, energy_nj: f64) -> Option<f64> {
    (ccq > 0 && energy_nj > 0.0).then(|| 1.0 / (ccq as f64 * energy_nj))
}

pub fn cost(trace: &ExecutionTrace, program: &CrossbarProgram, power: &PowerTable) -> CostReport {
    let events = count_events(trace).total;
    let vectors = trace.vectors as u64;
    let energy = energy_from_events(&events, routing_table_bits(program) * vectors, power);
    let total = energy.total();
    let ccq = events.ou_activations;
    let naive_ccq = program.naive_ccq_per_vector() * vectors;
    CostReport {
        strategy: program.strategy,
        direction: trace.direction,
        vectors: trace.vectors,
        ccq,
        naive_ccq,
        cycles: trace.cycles.len() as u64 * vectors,
        latency_cycles: trace.latency_cycles() as u64,
        events,
        energy_nj: energy,
        total_energy_nj: total,
        compression_ratio: (naive_ccq > 0).then(|| ccq as f64 / naive_ccq as f64),
        performance: performance(ccq, total),
        index_overhead_bits: index_overhead_bits(program),
        shift_record_baseline_bits: shift_record_baseline_bits(program),
    }
}

/// One point of the OU-height curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ou_height: usize,
    pub ou_width: usize,
    pub ccq: u64,
    pub naive_ccq: u64,
    pub compression_ratio: Option<f64>,
}

/// Compression ratio of `strategy` for each OU height (ascending).
pub fn sweep_ou_height(
    tensor: &QuantizedTensor,
    heights: &[usize],
    geometry: CrossbarGeometry,
    strategy: MappingStrategy,
) -> Result<Vec<SweepPoint>> {
    if heights.is_empty() || heights.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("OU heights must be non-empty and strictly ascending".into()));
    }
    heights
        .par_iter()
        .map(|&h| {
            let g = geometry.with_ou(OuShape::new(h, geometry.ou.width)?)?;
            let p = compile(tensor, g, strategy, Direction::Horizontal)?;
            Ok(SweepPoint {
                ou_height: h,
                ou_width: g.ou.width,
                ccq: p.ccq_per_vector(),
                naive_ccq: p.naive_ccq_per_vector(),
                compression_ratio: p.compression_ratio(),
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("ou_height,ou_width,ccq,naive_ccq,compression_ratio\n");
    for p in points {
        s += &format!("{},{},{},{},{}\n", p.ou_height, p.ou_width, p.ccq, p.naive_ccq, opt(p.compression_ratio));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub baseline: CostReport,
    pub reordered: CostReport,
    /// `perf_reordered / perf_baseline − 1`.
    pub improvement: Option<f64>,
}

/// Run `baseline` and similarity mapping on the same weights and input.
pub fn compare_baseline(
    tensor: &QuantizedTensor,
    geometry: CrossbarGeometry,
    baseline: MappingStrategy,
    direction: Direction,
    seed: u64,
    power: &PowerTable,
) -> Result<BaselineComparison> {
    let x = uniform_i8(1, tensor.rows(), seed);
    let run = |s: MappingStrategy| -> Result<CostReport> {
        let p = compile(tensor, geometry, s, direction)?;
        let out = simulate(&p, &x, direction)?;
        Ok(cost(&out.trace, &p, power))
    };
    let baseline = run(baseline)?;
    let reordered = run(MappingStrategy::Similarity)?;
    let improvement = match (reordered.performance, baseline.performance) {
        (Some(r), Some(b)) => Some(r / b - 1.0),
        _ => None,
    };
    Ok(BaselineComparison { baseline, reordered, improvement })
}

/// One point of the improvement-vs-sparsity curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityPoint {
    pub sparsity: f64,
    pub baseline_ccq: u64,
    pub reordered_ccq: u64,
    pub improvement: Option<f64>,
}

/// Improvement over `baseline` on pruned Gaussian `rows × cols` weights.
#[allow(clippy::too_many_arguments)]
pub fn sparsity_curve(
    rows: usize,
    cols: usize,
    sparsities: &[f64],
    geometry: CrossbarGeometry,
    baseline: MappingStrategy,
    direction: Direction,
    seed: u64,
    power: &PowerTable,
) -> Result<Vec<SparsityPoint>> {
    sparsities
        .par_iter()
        .map(|&p| {
            let t = pruned_gaussian(rows, cols, p, seed)?;
            let c = compare_baseline(&t, geometry, baseline, direction, seed, power)?;
            Ok(SparsityPoint {
                sparsity: p,
                baseline_ccq: c.baseline.ccq,
                reordered_ccq: c.reordered.ccq,
                improvement: c.improvement,
            })
        })
        .collect()
}

pub fn sparsity_csv(points: &[SparsityPoint]) -> String {
    let mut s = String::from("sparsity,baseline_ccq,reordered_ccq,improvement\n");
    for p in points {
        s += &format!("{},{},{},{}\n", p.sparsity, p.baseline_ccq, p.reordered_ccq, opt(p.improvement));
    }
    s
}
