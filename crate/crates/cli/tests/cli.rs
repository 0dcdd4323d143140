//! End-to-end tests of the binary: exit codes, report schema and
//! determinism, and the model pipelines.

use std::process::{Command, Output};

use serde_json::Value;

fn wminfo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wminfo"))
        .args(args)
        .env_remove("WMINFO_SEED")
        .output()
        .expect("binary runs")
}

fn parse_report(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("bad report JSON: {e}\n{text}"))
}

fn payload_f64(report: &Value, key: &str) -> f64 {
    report["payload"][key]
        .as_f64()
        .unwrap_or_else(|| panic!("payload.{key} missing in {report}"))
}

#[test]
fn estimate_xor_gate_is_high_order() {
    let out = wminfo(&["estimate", "--model", "toy:xor"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = parse_report(&out);
    assert_eq!(report["schema_version"], "1");
    assert!(payload_f64(&report, "m_normalized") > 0.95);
    assert!(payload_f64(&report, "w_normalized") < 0.05);
}

#[test]
fn estimate_copy_and_transfer_are_low_order() {
    for gate in ["toy:copy", "toy:transfer"] {
        let out = wminfo(&["estimate", "--model", gate]);
        assert!(out.status.success());
        let report = parse_report(&out);
        assert!(payload_f64(&report, "m_normalized") < 0.05, "{gate}");
    }
}

#[test]
fn estimate_uniform_var_smoke() {
    let out = wminfo(&[
        "estimate", "--model", "uniform-var", "--a", "0.5", "--c", "0.2",
    ]);
    assert!(out.status.success());
    let report = parse_report(&out);
    let w = payload_f64(&report, "w");
    let m = payload_f64(&report, "m");
    assert!(w.is_finite() && w > 0.0);
    assert!(m >= 0.0);
    assert_eq!(report["payload"]["units"], "nats");
}

#[test]
fn estimate_reports_bits_when_asked() {
    let nats = parse_report(&wminfo(&["estimate", "--model", "uniform-var", "--a", "0.5"]));
    let bits = parse_report(&wminfo(&[
        "estimate", "--model", "uniform-var", "--a", "0.5", "--bits",
    ]));
    let ratio = payload_f64(&nats, "w") / payload_f64(&bits, "w");
    assert!((ratio - std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(bits["payload"]["units"], "bits");
}

#[test]
fn estimate_missing_input_exits_2() {
    let out = wminfo(&["estimate", "--input", "definitely-not-here.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn estimate_non_numeric_csv_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "1.0,2.0\n3.0,abc\n").unwrap();
    let out = wminfo(&["estimate", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("row 2"), "stderr: {msg}");
}

#[test]
fn estimate_bias_correct_requires_samples() {
    let out = wminfo(&["estimate", "--model", "toy:copy", "--bias-correct"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_is_deterministic_up_to_timing() {
    let strip_seconds = |out: &Output| -> String {
        String::from_utf8_lossy(&out.stdout)
            .lines()
            .filter(|l| !l.contains("\"seconds\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let args = [
        "estimate", "--model", "uniform-var", "--a", "0.7", "--c", "0.3", "--seed", "99",
    ];
    let a = wminfo(&args);
    let b = wminfo(&args);
    assert!(a.status.success());
    assert_eq!(strip_seconds(&a), strip_seconds(&b));
}

#[test]
fn seed_env_var_is_honored() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_wminfo"))
        .args(["estimate", "--model", "uniform-var"])
        .env("WMINFO_SEED", "123")
        .output()
        .unwrap();
    let report = parse_report(&with_env);
    assert_eq!(report["seed"], 123);
}

#[test]
fn simulate_estimate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    let sim = wminfo(&[
        "simulate", "--model", "uniform-var", "--a", "0.6", "--c", "0.1",
        "--steps", "20000", "--seed", "7", "--out", path.to_str().unwrap(),
    ]);
    assert!(sim.status.success());

    let est = wminfo(&[
        "estimate", "--input", path.to_str().unwrap(), "--bias-correct", "--seed", "7",
    ]);
    assert!(est.status.success(), "{}", String::from_utf8_lossy(&est.stderr));
    let report = parse_report(&est);
    assert_eq!(report["payload"]["n_samples"], 19999);

    // The estimate from 20k samples lands near the exact population value.
    let pop = parse_report(&wminfo(&[
        "estimate", "--model", "uniform-var", "--a", "0.6", "--c", "0.1",
    ]));
    let diff = (payload_f64(&report, "w") - payload_f64(&pop, "w")).abs();
    assert!(diff < 0.05, "sampled vs population W differ by {diff}");
}

#[test]
fn estimate_unreachable_rescale_target_exits_3() {
    let out = wminfo(&[
        "estimate", "--model", "uniform-var", "--a", "0.5", "--rescale-mi", "100",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("unreachable"), "stderr: {msg}");
}

#[test]
fn estimate_duplicated_channels_succeeds() {
    // Identical channels put the sample correlation on the singular
    // boundary; the ingestion path must produce a usable estimate (via the
    // shrinkage ladder when the rounding lands past the boundary).
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.csv");
    let mut text = String::new();
    for t in 0..300 {
        let x = if t % 2 == 0 { 1.0 } else { 2.0 };
        text.push_str(&format!("{x},{x}\n"));
    }
    std::fs::write(&path, text).unwrap();
    let out = wminfo(&["estimate", "--input", path.to_str().unwrap(), "--lag", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = parse_report(&out);
    assert!(payload_f64(&report, "w").is_finite());
}

#[test]
fn phiid_dominant_atoms() {
    for (model, expect) in [("toy-atom:rtr", "rtr"), ("toy-atom:sts", "sts")] {
        let out = wminfo(&["phiid", "--model", model]);
        assert!(out.status.success());
        let report = parse_report(&out);
        assert_eq!(report["payload"]["dominant"], expect, "{model}");
        assert!(report["payload"]["residual"].as_f64().unwrap() < 1e-9);
        // Atom sums reproduce the W/M split.
        let w = payload_f64(&report, "w");
        let low = payload_f64(&report, "low_order_sum");
        assert!((w - low).abs() < 1e-8);
    }
}

#[test]
fn phiid_rejects_non_two_plus_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("three.csv");
    let mut text = String::new();
    for t in 0..50 {
        text.push_str(&format!("{0}.0,{1}.5,{2}.25\n", t % 7, (t + 3) % 5, (t + 1) % 3));
    }
    std::fs::write(&path, text).unwrap();
    let out = wminfo(&["phiid", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_grid_row_count_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("grid.csv");
    let config_path = dir.path().join("sweep.toml");
    std::fs::write(
        &config_path,
        format!(
            "model = \"uniform-var\"\n\
             [grid]\n\
             a = [0.3, 0.6]\n\
             c = [0.1, 0.5]\n\
             [output]\n\
             csv = {:?}\n",
            csv_path.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = wminfo(&["sweep", "--config", config_path.to_str().unwrap(), "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5, "header + 4 grid rows:\n{csv}");
    assert_eq!(lines[0], "a,c,mi,w,m,m_normalized,iterations,seconds");
    // Row-major over (a, c) in declared axis order.
    assert!(lines[1].starts_with("0.3,0.1,"));
    assert!(lines[2].starts_with("0.3,0.5,"));
    assert!(lines[3].starts_with("0.6,0.1,"));
    assert!(lines[4].starts_with("0.6,0.5,"));
}

#[test]
fn sweep_equal_mi_rescaling_hits_target() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("grid.csv");
    let config_path = dir.path().join("sweep.toml");
    std::fs::write(
        &config_path,
        format!(
            "model = \"modular-var\"\n\
             target_mi = 0.8\n\
             [grid]\n\
             a = [0.5, 0.7]\n\
             b = [0.2]\n\
             c = [0.1]\n\
             [output]\n\
             csv = {:?}\n",
            csv_path.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = wminfo(&["sweep", "--config", config_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    for line in csv.lines().skip(1) {
        // Columns: a, b, c, mi, ...
        let mi: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((mi - 0.8).abs() < 1e-6, "row {line}");
    }
}

#[test]
fn sweep_rejects_unknown_config_key() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("sweep.toml");
    std::fs::write(
        &config_path,
        "model = \"uniform-var\"\nnonsense_key = 3\n[grid]\na = [0.1]\nc = [0.1]\n[output]\ncsv = \"x.csv\"\n",
    )
    .unwrap();
    let out = wminfo(&["sweep", "--config", config_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("nonsense_key"), "stderr: {msg}");
}

#[test]
fn bench_emits_rep_and_aggregate_rows() {
    let out = wminfo(&[
        "bench", "--dims", "4", "--samples", "400", "--reps", "3", "--bias-correct",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "kind,dim,samples,tol,rep,w_true,w_est,rel_err,seconds,sem_rel_err");
    let reps = lines.iter().filter(|l| l.starts_with("rep,")).count();
    let aggs = lines.iter().filter(|l| l.starts_with("aggregate,")).count();
    assert_eq!(reps, 3);
    assert_eq!(aggs, 1);
}
