// SPDX-License-Identifier: Apache-2.0
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oumap::matrix::Matrix;
use oumap::tensor_io::TensorFile;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn oumap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oumap")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = oumap(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn expected() -> Vec<i32> {
    TensorFile::read(fixture("expected_4x64.oten")).unwrap().to_matrix_i32().unwrap().into_vec()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn pipeline_matches_dense_product() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("w.oupl");
    let y = dir.path().join("y.oten");
    let trace = dir.path().join("events.jsonl");
    ok(&["reorder", "--weights", s(&fixture("weights_64x64.oten")), "--plan", s(&plan)]);
    ok(&[
        "simulate", "--plan", s(&plan), "--activations", s(&fixture("activations_4x64.oten")),
        "--output", s(&y), "--trace-out", s(&trace),
    ]);
    let out = TensorFile::read(&y).unwrap();
    assert_eq!(out.dims(), &[4, 64]);
    assert_eq!(out.to_matrix_i32().unwrap().into_vec(), expected());
    let summary = json(&dir.path().join("w.oupl.json"));
    assert_eq!(summary["rows"], 64);
    let lines = std::fs::read_to_string(&trace).unwrap();
    assert!(lines.lines().count() > 0);
    for line in lines.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["rows_activated"].as_u64().unwrap() <= 7);
    }
}

#[test]
fn every_strategy_and_direction_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    for strategy in ["naive", "zero-skip", "similarity"] {
        for direction in ["horizontal", "vertical"] {
            let plan = dir.path().join(format!("{strategy}.oupl"));
            let y = dir.path().join(format!("{strategy}-{direction}.oten"));
            ok(&[
                "reorder", "--weights", s(&fixture("weights_64x64.oten")), "--plan", s(&plan),
                "--strategy", strategy, "--ou-height", "4", "--ou-width", "4", "--crossbar-rows", "32",
                "--crossbar-cols", "32",
            ]);
            ok(&[
                "simulate", "--plan", s(&plan), "--activations", s(&fixture("activations_4x64.oten")),
                "--output", s(&y), "--direction", direction,
            ]);
            assert_eq!(TensorFile::read(&y).unwrap().to_matrix_i32().unwrap().into_vec(), expected());
        }
    }
}

#[test]
fn report_output_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    ok(&[
        "report", "--weights", s(&fixture("weights_64x64.oten")), "--activations",
        s(&fixture("activations_4x64.oten")), "--out-dir", s(&out), "--sparsities", "0,0.5,0.9",
    ]);
    let r = json(&out.join("report.json"));
    let values: Vec<i32> = r["output"]["values"].as_array().unwrap().iter().map(|v| v.as_i64().unwrap() as i32).collect();
    assert_eq!(values, expected());
    assert_eq!(r["cost"]["vectors"], 4);
    assert!(r["cost"]["ccq"].as_u64().unwrap() <= r["cost"]["naive_ccq"].as_u64().unwrap());
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 5);
    assert!(sweep.starts_with("ou_height,"));
    let curve = std::fs::read_to_string(out.join("sparsity.csv")).unwrap();
    assert_eq!(curve.lines().count(), 4);
    let table = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(table.contains("CCQ") && table.contains("improvement"));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: &str| {
        let out = dir.path().join(name);
        ok(&[
            "--jobs", jobs, "report", "--weights", s(&fixture("weights_64x64.oten")), "--activations",
            s(&fixture("activations_4x64.oten")), "--out-dir", s(&out), "--sparsities", "0.3,0.6",
            "--heights", "2,7",
        ]);
        ["report.json", "sweep.csv", "sparsity.csv", "summary.txt"].map(|f| std::fs::read(out.join(f)).unwrap())
    };
    assert_eq!(run("a", "1"), run("b", "1"));
    let plan = |name: &str| {
        let p = dir.path().join(name);
        ok(&["--jobs", "1", "reorder", "--weights", s(&fixture("weights_64x64.oten")), "--plan", s(&p)]);
        std::fs::read(p).unwrap()
    };
    assert_eq!(plan("p1.oupl"), plan("p2.oupl"));
}

#[test]
fn all_zero_weights_give_empty_plan() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("zero.oten");
    TensorFile::from_matrix_i8(&Matrix::zeros(20, 10)).write(&w).unwrap();
    let plan = dir.path().join("zero.oupl");
    ok(&["reorder", "--weights", s(&w), "--plan", s(&plan)]);
    assert_eq!(json(&dir.path().join("zero.oupl.json"))["ous"], 0);
}

#[test]
fn mismatched_shapes_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("w.oupl");
    ok(&["reorder", "--weights", s(&fixture("weights_64x64.oten")), "--plan", s(&plan)]);
    let x = dir.path().join("x.oten");
    TensorFile::from_matrix_i8(&Matrix::zeros(1, 63)).write(&x).unwrap();
    let out = oumap(&["simulate", "--plan", s(&plan), "--activations", s(&x), "--output", s(&dir.path().join("y.oten"))]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "ou_depth = 3\n").unwrap();
    let out = oumap(&["--config", s(&cfg), "reorder", "--weights", s(&fixture("weights_64x64.oten")), "--plan", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let out = oumap(&["reorder", "--weights", s(&fixture("weights_64x64.oten")), "--plan", "x", "--ou-height", "200"]);
    assert_eq!(out.status.code(), Some(2));
    let out = oumap(&["sweep", "--weights", s(&fixture("weights_64x64.oten")), "--heights", "4,2", "--output", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_sets_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small crossbar\ncrossbar_rows = 16\ncrossbar_cols = 16\nou_height = 3\nou_width = 4\n").unwrap();
    let plan = dir.path().join("w.oupl");
    ok(&["--config", s(&cfg), "reorder", "--weights", s(&fixture("weights_64x64.oten")), "--plan", s(&plan)]);
    let g = &json(&dir.path().join("w.oupl.json"))["geometry"];
    assert_eq!((g["crossbar_rows"].as_u64(), g["ou"]["height"].as_u64()), (Some(16), Some(3)));
    // A flag beats the file.
    ok(&["--config", s(&cfg), "reorder", "--weights", s(&fixture("weights_64x64.oten")), "--plan", s(&plan), "--ou-height", "2"]);
    assert_eq!(json(&dir.path().join("w.oupl.json"))["geometry"]["ou"]["height"], 2);
}

#[test]
fn missing_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = oumap(&["reorder", "--weights", s(&dir.path().join("absent.oten")), "--plan", s(&dir.path().join("p"))]);
    assert_eq!(out.status.code(), Some(3));
    let out = oumap(&["--config", s(&dir.path().join("absent.cfg")), "sweep", "--sparsity-curve", "8x8", "--output", "x"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn quantize_synthetic_and_float_input() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.oten");
    ok(&["quantize", "--synthetic", "32x16", "--sparsity", "0.5", "--seed", "3", "--output", s(&q)]);
    let t = TensorFile::read(&q).unwrap();
    assert_eq!(t.dims(), &[32, 16]);
    let meta = json(&dir.path().join("q.oten.json"));
    assert!((meta["sparsity"].as_f64().unwrap() - 0.5).abs() < 0.01);

    let f = dir.path().join("f.oten");
    TensorFile::from_matrix_f32(&Matrix::from_vec(1, 3, vec![0.5f32, -0.25, 1.0]).unwrap()).write(&f).unwrap();
    ok(&["quantize", "--input", s(&f), "--output", s(&q)]);
    assert_eq!(TensorFile::read(&q).unwrap().to_matrix_i8().unwrap().into_vec(), vec![64, -32, 127]);
}

#[test]
fn analyze_writes_grid_and_bit_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    let bits = dir.path().join("bits.csv");
    ok(&[
        "analyze", "--m", "14", "--n", "2", "--k", "half", "--trials", "20000", "--output", s(&grid),
        "--bits-output", s(&bits), "--sparsities", "0,0.6",
    ]);
    let grid = std::fs::read_to_string(grid).unwrap();
    let row: Vec<&str> = grid.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..3], &["14", "2", "7"]);
    assert!((row[4].parse::<f64>().unwrap() - 0.6047).abs() < 1e-4);
    let bits = std::fs::read_to_string(bits).unwrap();
    let last: Vec<f64> = bits.lines().nth(2).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[1] - (0.5 * last[0] + 0.5)).abs() < 1e-6 && (last[2] - 0.8).abs() < 0.02);
}

#[test]
fn reorder_trace_and_reconstruction() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let back = dir.path().join("back.oten");
    ok(&[
        "reorder", "--weights", s(&fixture("weights_64x64.oten")), "--plan", s(&dir.path().join("p")),
        "--trace", s(&trace), "--reconstructed", s(&back),
    ]);
    let text = std::fs::read_to_string(trace).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("# plane")).count(), 8);
    assert_eq!(std::fs::read(back).unwrap(), std::fs::read(fixture("weights_64x64.oten")).unwrap());
}

#[test]
fn sweep_sparsity_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    ok(&["sweep", "--sparsity-curve", "32x32", "--sparsities", "0.3,0.9", "--baseline", "naive", "--output", s(&out)]);
    let text = std::fs::read_to_string(out).unwrap();
    for line in text.lines().skip(1) {
        assert!(line.rsplit(',').next().unwrap().parse::<f64>().unwrap() > 0.0, "{line}");
    }
}

#[test]
fn every_subcommand_has_help() {
    for cmd in ["quantize", "analyze", "reorder", "simulate", "report", "sweep"] {
        let out = ok(&[cmd, "--help"]);
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("--ou-height") && text.contains("--config"), "{cmd}");
    }
}
