// SPDX-License-Identifier: Apache-2.0
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use oumap::cost::{cost, sparsity_csv, sparsity_curve, sweep_csv, sweep_ou_height, CostReport};
use oumap::matrix::Matrix;
use oumap::plan::{compile, plane_tile, tiles_for, CrossbarProgram, Direction, PlanSummary};
use oumap::reorder::{reorder_similarity, MappingStrategy};
use oumap::sim::simulate as run_simulation;
use oumap::stats::{
    measured_zero_bit_ratio, monte_carlo_identical_rows, prob_at_least_k_identical, zero_bit_ratio,
    SimilarityModelParams,
};
use oumap::synthetic::{pruned_gaussian, uniform_nonzero_i8};
use oumap::tensor_io::{
    flatten_to_matrix, prune_magnitude, quantize_i8, BitPlaneSet, QuantizedTensor, TensorData, TensorFile,
};
use oumap::BITS;
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};
use crate::output::{sidecar, write_atomic, write_atomic_with};
use crate::MappingArgs;

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn read_tensor(path: &Path) -> Result<TensorFile> {
    TensorFile::read(path).with_context(|| format!("reading {}", path.display()))
}

fn read_weights(path: &Path) -> Result<QuantizedTensor> {
    let t = read_tensor(path)?;
    match t.data() {
        TensorData::I8(_) => Ok(QuantizedTensor::from_values(t.to_matrix_i8()?)),
        _ => Err(invalid(format!("{} is not an int8 tensor; run `oumap quantize` first", path.display()))),
    }
}

/// Activations as `batch × inputs`; a rank-1 tensor is a single vector.
fn read_activations(path: &Path) -> Result<Matrix<i8>> {
    let t = read_tensor(path)?;
    let TensorData::I8(v) = t.data() else {
        bail!(invalid(format!("{} is not an int8 tensor", path.display())));
    };
    match t.dims() {
        [n] => Ok(Matrix::from_vec(1, *n as usize, v.clone())?),
        [b, n] => Ok(Matrix::from_vec(*b as usize, *n as usize, v.clone())?),
        dims => Err(invalid(format!("activations must be rank 1 or 2, got dims {dims:?}"))),
    }
}

fn write_tensor(path: &Path, t: &TensorFile) -> Result<()> {
    write_atomic(path, &t.to_bytes())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let parsed = s.split_once('x').and_then(|(r, c)| Some((r.parse().ok()?, c.parse().ok()?)));
    match parsed {
        Some((r, c)) if r > 0 && c > 0 => Ok((r, c)),
        _ => Err(invalid(format!("bad shape '{s}', expected ROWSxCOLS"))),
    }
}

fn to_i32(m: &Matrix<i64>) -> Result<Matrix<i32>> {
    let values = m
        .as_slice()
        .iter()
        .map(|&v| i32::try_from(v).map_err(|_| invalid(format!("output value {v} does not fit in i32"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Matrix::from_vec(m.rows(), m.cols(), values)?)
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    /// Float (or int8) tensor to quantize; rank 3/4 tensors are flattened filter-per-column.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    input: Option<PathBuf>,
    /// Generate a pruned Gaussian ROWSxCOLS matrix instead of reading one.
    #[arg(long, value_name = "ROWSxCOLS")]
    synthetic: Option<String>,
    /// Fraction of weights zeroed by magnitude pruning before quantization.
    #[arg(long, default_value_t = 0.0)]
    sparsity: f64,
    /// Int8 weight matrix to write; a `.json` sidecar records scale and sparsity.
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    pub mapping: MappingArgs,
}

#[derive(Serialize)]
struct QuantizeSummary {
    rows: usize,
    cols: usize,
    scale: f32,
    sparsity: f64,
}

pub fn quantize(a: &QuantizeArgs, cfg: &RunConfig) -> Result<()> {
    if !(0.0..=1.0).contains(&a.sparsity) {
        bail!(invalid(format!("sparsity {} outside [0, 1]", a.sparsity)));
    }
    let q = match (&a.input, &a.synthetic) {
        (_, Some(shape)) => {
            let (r, c) = parse_shape(shape)?;
            pruned_gaussian(r, c, a.sparsity, cfg.seed)?
        }
        (Some(path), None) => {
            let t = read_tensor(path)?;
            match t.data() {
                TensorData::I8(_) => QuantizedTensor::from_values(t.to_matrix_i8()?),
                _ => {
                    let m = t.to_matrix_f32()?;
                    let m = flatten_to_matrix(t.dims(), m.as_slice())?;
                    quantize_i8(&prune_magnitude(&m, a.sparsity)?)?
                }
            }
        }
        (None, None) => bail!(invalid("either --input or --synthetic is required")),
    };
    write_tensor(&a.output, &TensorFile::from_matrix_i8(q.values()))?;
    let summary = QuantizeSummary { rows: q.rows(), cols: q.cols(), scale: q.scale(), sparsity: q.sparsity() };
    write_json(&sidecar(&a.output), &summary)
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Vector lengths m for the identical-row grid.
    #[arg(long, value_delimiter = ',', default_values_t = [8usize, 14, 20])]
    m: Vec<usize>,
    /// Group sizes n.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4])]
    n: Vec<usize>,
    /// Row-count thresholds k; `half` stands for m/2. Values above m are skipped.
    #[arg(long, value_delimiter = ',', default_values_t = ["half".to_string(), "7".to_string()])]
    k: Vec<String>,
    /// Monte-Carlo trials per grid point.
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    /// CSV with m,n,k,p,closed_form,monte_carlo,stderr.
    #[arg(long)]
    output: PathBuf,
    /// CSV with sparsity,ideal_ratio,measured_ratio.
    #[arg(long)]
    bits_output: Option<PathBuf>,
    /// Int8 tensor measured for --bits-output; synthetic tensors are used without it.
    #[arg(long, requires = "bits_output")]
    tensor: Option<PathBuf>,
    /// Sparsities of the synthetic tensors measured for --bits-output.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.2, 0.4, 0.6, 0.8])]
    sparsities: Vec<f64>,
    #[command(flatten)]
    pub mapping: MappingArgs,
}

pub fn analyze(a: &AnalyzeArgs, cfg: &RunConfig) -> Result<()> {
    let mut csv = String::from("m,n,k,p,closed_form,monte_carlo,stderr\n");
    for &m in &a.m {
        for &n in &a.n {
            let mut ks = Vec::new();
            for k in &a.k {
                let k = if k == "half" { m / 2 } else { k.parse().map_err(|_| invalid(format!("bad k '{k}'")))? };
                if k <= m && !ks.contains(&k) {
                    ks.push(k);
                }
            }
            for k in ks {
                let params = SimilarityModelParams::new(m, n, k, 0.5).map_err(|e| invalid(e.to_string()))?;
                let exact = prob_at_least_k_identical(&params)?;
                let mc = monte_carlo_identical_rows(&params, a.trials, cfg.seed).map_err(|e| invalid(e.to_string()))?;
                writeln!(csv, "{m},{n},{k},{},{exact:.8},{:.8},{:.8}", params.p, mc.estimate, mc.stderr)?;
            }
        }
    }
    write_atomic(&a.output, csv.as_bytes())?;

    if let Some(path) = &a.bits_output {
        let mut csv = String::from("sparsity,ideal_ratio,measured_ratio\n");
        let mut row = |values: &Matrix<i8>| -> Result<()> {
            let zeros = values.as_slice().iter().filter(|&&v| v == 0).count() as f64 / values.len() as f64;
            let measured = measured_zero_bit_ratio(&BitPlaneSet::from_values(values))?;
            writeln!(csv, "{zeros:.6},{:.6},{measured:.6}", zero_bit_ratio(zeros)?)?;
            Ok(())
        };
        match &a.tensor {
            Some(t) => row(read_weights(t)?.values())?,
            None => {
                for (i, &p) in a.sparsities.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        bail!(invalid(format!("sparsity {p} outside [0, 1]")));
                    }
                    row(&uniform_nonzero_i8(512, 512, p, cfg.seed.wrapping_add(i as u64)))?;
                }
            }
        }
        write_atomic(path, csv.as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ReorderArgs {
    /// Int8 weight matrix (rows = inputs, columns = outputs).
    #[arg(long)]
    weights: PathBuf,
    /// Plan file to write; a `.json` sidecar summarizes it.
    #[arg(long)]
    plan: PathBuf,
    /// Write the reordering step log of every plane tile (similarity strategy only).
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Write the weight matrix rebuilt from the plan as an int8 tensor.
    #[arg(long, value_name = "FILE")]
    reconstructed: Option<PathBuf>,
    #[command(flatten)]
    pub mapping: MappingArgs,
}

pub fn reorder(a: &ReorderArgs, cfg: &RunConfig) -> Result<()> {
    let q = read_weights(&a.weights)?;
    let program = compile(&q, cfg.geometry, cfg.strategy, cfg.direction.unwrap_or(Direction::Horizontal))?;
    write_atomic(&a.plan, &program.to_bytes())?;
    write_atomic(&sidecar(&a.plan), (program.summary().to_json() + "\n").as_bytes())?;
    if let Some(path) = &a.trace {
        if cfg.strategy != MappingStrategy::Similarity {
            bail!(invalid("--trace needs the similarity strategy"));
        }
        let tiles = tiles_for(q.rows(), q.cols(), &cfg.geometry);
        let mut text = String::new();
        for plane in 0..BITS {
            for (t, tile) in tiles.iter().enumerate() {
                let m = plane_tile(q.values(), tile, plane);
                writeln!(text, "# plane {plane} tile {t} rows {}+{} cols {}+{}", tile.row_start, tile.rows, tile.col_start, tile.cols)?;
                text += &reorder_similarity(&m, cfg.geometry.ou, true).trace_text();
            }
        }
        write_atomic(path, text.as_bytes())?;
    }
    if let Some(path) = &a.reconstructed {
        write_tensor(path, &TensorFile::from_matrix_i8(&oumap::plan::reconstruct_weights(&program)?))?;
    }
    Ok(())
}

fn read_plan(path: &Path) -> Result<CrossbarProgram> {
    CrossbarProgram::read(path).with_context(|| format!("reading plan {}", path.display()))
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Plan written by `oumap reorder`.
    #[arg(long)]
    plan: PathBuf,
    /// Int8 activations, one vector (rank 1) or batch × inputs (rank 2).
    #[arg(long)]
    activations: PathBuf,
    /// Int32 output tensor, batch × outputs.
    #[arg(long)]
    output: PathBuf,
    /// Write one JSON object per crossbar cycle.
    #[arg(long, value_name = "FILE")]
    trace_out: Option<PathBuf>,
    #[command(flatten)]
    pub mapping: MappingArgs,
}

pub fn simulate(a: &SimulateArgs, cfg: &RunConfig) -> Result<()> {
    let program = read_plan(&a.plan)?;
    let x = read_activations(&a.activations)?;
    let direction = cfg.direction.unwrap_or(program.direction);
    let out = run_simulation(&program, &x, direction)?;
    write_tensor(&a.output, &TensorFile::from_matrix_i32(&to_i32(&out.output)?))?;
    if let Some(path) = &a.trace_out {
        write_atomic_with(path, |w| out.trace.write_jsonl(w).map_err(Into::into))?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Int8 weight matrix.
    #[arg(long)]
    weights: PathBuf,
    /// Int8 activations, rank 1 or 2.
    #[arg(long)]
    activations: PathBuf,
    /// Directory for report.json, sweep.csv, sparsity.csv and summary.txt.
    #[arg(long)]
    out_dir: PathBuf,
    /// OU heights of the compression-ratio curve (ascending; heights above the crossbar are skipped).
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 7, 14])]
    heights: Vec<usize>,
    /// Sparsities of the improvement curve, on synthetic matrices shaped like the weights.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.99])]
    sparsities: Vec<f64>,
    #[command(flatten)]
    pub mapping: MappingArgs,
}

#[derive(Serialize)]
struct OutputMatrix {
    rows: usize,
    cols: usize,
    values: Vec<i64>,
}

#[derive(Serialize)]
struct Report {
    plan: PlanSummary,
    cost: CostReport,
    baseline: CostReport,
    /// Performance of the plan relative to the baseline, minus one.
    improvement: Option<f64>,
    output: OutputMatrix,
}

fn summary_table(r: &Report) -> String {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    let mut s = String::new();
    let _ = writeln!(s, "weights            {} x {}", r.plan.rows, r.plan.cols);
    let _ = writeln!(
        s,
        "geometry           crossbar {}x{}, OU {}x{}, ADC {} bit",
        r.plan.geometry.crossbar_rows, r.plan.geometry.crossbar_cols, r.plan.geometry.ou.height, r.plan.geometry.ou.width, r.plan.geometry.adc_bits
    );
    let _ = writeln!(s, "direction          {}", r.cost.direction);
    let _ = writeln!(s, "vectors            {}", r.cost.vectors);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<18} {:>14} {:>14}", "", r.cost.strategy, r.baseline.strategy);
    let _ = writeln!(s, "{:<18} {:>14} {:>14}", "CCQ", r.cost.ccq, r.baseline.ccq);
    let _ = writeln!(s, "{:<18} {:>14} {:>14}", "cycles", r.cost.cycles, r.baseline.cycles);
    let _ = writeln!(s, "{:<18} {:>14} {:>14}", "latency cycles", r.cost.latency_cycles, r.baseline.latency_cycles);
    let _ = writeln!(s, "{:<18} {:>14.3} {:>14.3}", "energy (nJ)", r.cost.total_energy_nj, r.baseline.total_energy_nj);
    let _ = writeln!(s, "{:<18} {:>14} {:>14}", "compression ratio", opt(r.cost.compression_ratio), opt(r.baseline.compression_ratio));
    let _ = writeln!(s, "{:<18} {:>14} {:>14}", "index bits", r.cost.index_overhead_bits, r.baseline.index_overhead_bits);
    let _ = writeln!(s);
    let _ = writeln!(s, "improvement        {}", opt(r.improvement));
    s
}

pub fn report(a: &ReportArgs, cfg: &RunConfig) -> Result<()> {
    let q = read_weights(&a.weights)?;
    let x = read_activations(&a.activations)?;
    let direction = cfg.direction.unwrap_or(Direction::Horizontal);
    let run = |strategy| -> Result<(CrossbarProgram, CostReport, Matrix<i64>)> {
        let program = compile(&q, cfg.geometry, strategy, direction)?;
        let out = run_simulation(&program, &x, direction)?;
        let c = cost(&out.trace, &program, &cfg.power);
        Ok((program, c, out.output))
    };
    let (program, cost_report, output) = run(cfg.strategy)?;
    let (_, baseline, _) = run(cfg.baseline)?;
    let improvement = match (cost_report.performance, baseline.performance) {
        (Some(r), Some(b)) => Some(r / b - 1.0),
        _ => None,
    };
    let report = Report {
        plan: program.summary(),
        cost: cost_report,
        baseline,
        improvement,
        output: OutputMatrix { rows: output.rows(), cols: output.cols(), values: output.into_vec() },
    };

    let heights: Vec<usize> = a.heights.iter().copied().filter(|&h| h <= cfg.geometry.crossbar_rows).collect();
    let sweep = sweep_ou_height(&q, &heights, cfg.geometry, cfg.strategy).map_err(|e| invalid(e.to_string()))?;
    if a.sparsities.iter().any(|p| !(0.0..=1.0).contains(p)) {
        bail!(invalid("sparsities must lie in [0, 1]"));
    }
    let curve = sparsity_curve(q.rows(), q.cols(), &a.sparsities, cfg.geometry, cfg.baseline, direction, cfg.seed, &cfg.power)?;

    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    write_json(&a.out_dir.join("report.json"), &report)?;
    write_atomic(&a.out_dir.join("sweep.csv"), sweep_csv(&sweep).as_bytes())?;
    write_atomic(&a.out_dir.join("sparsity.csv"), sparsity_csv(&curve).as_bytes())?;
    write_atomic(&a.out_dir.join("summary.txt"), summary_table(&report).as_bytes())
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Int8 weight matrix for the compression-ratio curve over OU heights.
    #[arg(long, required_unless_present = "sparsity_curve")]
    weights: Option<PathBuf>,
    /// OU heights, strictly ascending.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 7, 14])]
    heights: Vec<usize>,
    /// Instead, sweep sparsity on synthetic ROWSxCOLS matrices against the baseline strategy.
    #[arg(long, value_name = "ROWSxCOLS", conflicts_with = "weights")]
    sparsity_curve: Option<String>,
    /// Sparsities for --sparsity-curve.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.99])]
    sparsities: Vec<f64>,
    /// CSV to write.
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    pub mapping: MappingArgs,
}

pub fn sweep(a: &SweepArgs, cfg: &RunConfig) -> Result<()> {
    let csv = if let Some(shape) = &a.sparsity_curve {
        let (r, c) = parse_shape(shape)?;
        if a.sparsities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            bail!(invalid("sparsities must lie in [0, 1]"));
        }
        let direction = cfg.direction.unwrap_or(Direction::Horizontal);
        sparsity_csv(&sparsity_curve(r, c, &a.sparsities, cfg.geometry, cfg.baseline, direction, cfg.seed, &cfg.power)?)
    } else {
        let q = read_weights(a.weights.as_deref().expect("clap requires --weights"))?;
        sweep_csv(&sweep_ou_height(&q, &a.heights, cfg.geometry, cfg.strategy).map_err(|e| invalid(e.to_string()))?)
    };
    write_atomic(&a.output, csv.as_bytes())
}
