//! End-to-end tests of the installed binary: artifact formats, metadata
//! sidecars, flag/config precedence, exit codes, and bitwise replay of
//! recorded runs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dicke_rbm_core::read_weights_file;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicke-rbm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed with {:?}:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn meta(artifact: &Path) -> serde_json::Value {
    let path = format!("{}.meta.json", artifact.display());
    serde_json::from_str(&fs::read_to_string(&path).expect("metadata sidecar exists"))
        .expect("metadata parses")
}

#[test]
fn sample_writes_the_requested_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.txt");
    let out_s = out.to_str().unwrap();
    run_ok(&[
        "sample", "--n", "8", "--d", "3", "--count", "40", "--seed", "5", "--out", out_s,
    ]);

    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 40);
    for line in &lines {
        let ones = line.split(' ').filter(|t| *t == "1").count();
        let tokens = line.split(' ').count();
        assert_eq!(tokens, 8);
        assert_eq!(ones, 3);
    }

    let m = meta(&out);
    assert_eq!(m["command"], "sample");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["parameters"]["count"], 40);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn zero_sample_counts_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sample", "--n", "8", "--d", "3", "--count", "0", "--seed", "1",
        "--out", dir.path().join("s.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("count"));
}

#[test]
fn generated_seeds_replay_bitwise_from_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.txt");
    run_ok(&[
        "sample", "--n", "6", "--d", "2", "--count", "25",
        "--out", first.to_str().unwrap(),
    ]);

    let recorded = meta(&first)["parameters"]["seed"]
        .as_u64()
        .expect("generated seed recorded");
    let replay = dir.path().join("b.txt");
    run_ok(&[
        "sample", "--n", "6", "--d", "2", "--count", "25",
        "--seed", &recorded.to_string(),
        "--out", replay.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&replay).unwrap());
}

#[test]
fn train_writes_weights_trace_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    run_ok(&[
        "sample", "--n", "4", "--d", "1", "--count", "200", "--seed", "1",
        "--out", data.to_str().unwrap(),
    ]);

    let weights = dir.path().join("rbm.json");
    run_ok(&[
        "train", "--data", data.to_str().unwrap(),
        "--epochs", "15", "--seed", "9",
        "--target-n", "4", "--target-d", "1",
        "--out", weights.to_str().unwrap(),
    ]);

    let (rbm, stored) = read_weights_file(&weights).unwrap();
    assert_eq!(rbm.n_visible(), 4);
    assert_eq!(rbm.n_hidden(), 4); // defaults to one hidden unit per site
    let stored = stored.expect("training metadata embedded");
    assert_eq!(stored.seed, Some(9));
    assert!(stored.fidelity.unwrap() > 0.0);
    let config = stored.config.unwrap();
    assert_eq!(config["epochs"], 15);
    assert_eq!(config["cd_steps"], 10);
    assert_eq!(config["learning_rate"], 0.1);
    assert_eq!(config["batch_size"], 100);

    let trace = dir.path().join("rbm.trace.csv");
    let text = fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 17); // header + epochs 0..=15
    assert_eq!(text.lines().next().unwrap(), "epoch,fidelity,nll");

    let m = meta(&weights);
    assert_eq!(m["command"], "train");
    assert_eq!(m["parameters"]["hidden"], 4);
    assert_eq!(m["parameters"]["checkpoint"], "fidelity");

    // Replaying the recorded parameters reproduces both artifacts bitwise.
    let weights2 = dir.path().join("rbm2.json");
    let trace2 = dir.path().join("t2.csv");
    run_ok(&[
        "train", "--data", data.to_str().unwrap(),
        "--epochs", "15", "--seed", "9",
        "--target-n", "4", "--target-d", "1",
        "--out", weights2.to_str().unwrap(),
        "--trace", trace2.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&weights).unwrap(), fs::read(&weights2).unwrap());
    assert_eq!(fs::read(&trace).unwrap(), fs::read(&trace2).unwrap());
}

#[test]
fn train_requires_a_complete_target() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    run_ok(&[
        "sample", "--n", "4", "--d", "1", "--count", "50", "--seed", "1",
        "--out", data.to_str().unwrap(),
    ]);
    let code = exit_code(&[
        "train", "--data", data.to_str().unwrap(), "--target-n", "4",
        "--epochs", "1", "--seed", "1",
        "--out", dir.path().join("w.json").to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn runaway_learning_rates_exit_with_the_training_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    run_ok(&[
        "sample", "--n", "4", "--d", "2", "--count", "100", "--seed", "2",
        "--out", data.to_str().unwrap(),
    ]);
    let out = run(&[
        "train", "--data", data.to_str().unwrap(),
        "--epochs", "3", "--seed", "1", "--learning-rate", "1.7e308",
        "--out", dir.path().join("w.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("training"));
}

#[test]
fn fidelity_evaluates_stored_weights() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    run_ok(&[
        "sample", "--n", "4", "--d", "1", "--count", "200", "--seed", "3",
        "--out", data.to_str().unwrap(),
    ]);
    let weights = dir.path().join("w.json");
    run_ok(&[
        "train", "--data", data.to_str().unwrap(), "--epochs", "10", "--seed", "4",
        "--out", weights.to_str().unwrap(),
    ]);

    let out = run_ok(&["fidelity", "--weights", weights.to_str().unwrap(), "--d", "1"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("fidelity against the (N=4, D=1) Dicke state"));

    // Mismatched --n is rejected before any computation.
    let code = exit_code(&[
        "fidelity", "--weights", weights.to_str().unwrap(), "--n", "5", "--d", "1",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn fidelity_reports_all_compact_sectors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.json");
    run_ok(&[
        "fidelity", "--n", "8", "--w-min", "-2", "--w-max", "10",
        "--out", out.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let fidelities = report["fidelities"].as_array().unwrap();
    assert_eq!(fidelities.len(), 9);
    let total: f64 = fidelities.iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() <= 1e-9);
    assert_eq!(report["best"]["best_d"], 3);
    assert_eq!(meta(&out)["command"], "fidelity");
}

#[test]
fn fidelity_rejects_mixed_modes() {
    assert_eq!(exit_code(&["fidelity", "--n", "8", "--d", "3"]), 2);
    assert_eq!(
        exit_code(&["fidelity", "--n", "8", "--w-min", "-1", "--d", "3"]),
        2
    );
}

#[test]
fn ursell_emits_every_projection_label() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let json = dir.path().join("u.json");
    run_ok(&[
        "ursell", "--n", "8", "--d", "4", "--order", "2",
        "--out", out.to_str().unwrap(), "--json", json.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 10); // header + 3^2 labels
    assert_eq!(text.lines().next().unwrap(), "order,label,sites,value");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["n_qubits"], 8);
    assert_eq!(report["order"], 2);
}

#[test]
fn ursell_rejects_order_five() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let code = exit_code(&[
        "ursell", "--n", "8", "--d", "4", "--order", "5",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn ursell_capacity_guard_maps_to_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let code = exit_code(&[
        "ursell", "--n", "22", "--d", "1", "--order", "2",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
}

#[test]
fn product_state_check_reports_vanishing_correlations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pc.csv");
    let stdout = run_ok(&[
        "ursell", "--n", "6", "--order", "3", "--product-check",
        "--out", out.to_str().unwrap(),
    ]);
    let text = String::from_utf8_lossy(&stdout.stdout);
    assert!(text.contains("product-state check"));
    for line in fs::read_to_string(&out).unwrap().lines().skip(1) {
        let value: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(value, 0.0);
    }

    // First-order moments do not vanish on product states.
    assert_eq!(
        exit_code(&[
            "ursell", "--n", "6", "--order", "1", "--product-check",
            "--out", out.to_str().unwrap(),
        ]),
        2
    );
}

#[test]
fn phase_diagram_streaming_and_in_memory_paths_agree() {
    let dir = tempfile::tempdir().unwrap();
    let streamed = dir.path().join("s.csv");
    let buffered = dir.path().join("b.csv");
    let ppm = dir.path().join("b.ppm");
    let common = [
        "phase-diagram", "--n", "6",
        "--w-min-start", "-4", "--w-min-stop", "-0.5", "--w-min-count", "12",
        "--w-max-start", "0.5", "--w-max-stop", "20", "--w-max-count", "9",
    ];

    let mut args = common.to_vec();
    args.extend(["--out", streamed.to_str().unwrap()]);
    run_ok(&args);

    let mut args = common.to_vec();
    args.extend([
        "--out", buffered.to_str().unwrap(),
        "--ppm", ppm.to_str().unwrap(),
    ]);
    run_ok(&args);

    assert_eq!(fs::read(&streamed).unwrap(), fs::read(&buffered).unwrap());
    let text = fs::read_to_string(&streamed).unwrap();
    assert_eq!(text.lines().count(), 1 + 12 * 9);
    assert_eq!(text.lines().next().unwrap(), "w_min,w_max,best_D,best_F");

    let header: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("s.header.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(header["w_min_axis"]["count"], 12);
    assert_eq!(header["w_max_axis"]["count"], 9);

    let pixmap = fs::read_to_string(&ppm).unwrap();
    let mut lines = pixmap.lines();
    assert_eq!(lines.next().unwrap(), "P3");
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(lines.next().unwrap(), "9 12"); // columns (w_max) x rows (w_min)
}

#[test]
fn path_csv_has_one_column_per_requested_sector() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    run_ok(&[
        "path", "--n", "8",
        "--start-w-min", "-3", "--start-w-max", "5",
        "--end-w-min", "-3", "--end-w-max", "40",
        "--samples", "11", "--d-list", "3,4",
        "--out", out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert_eq!(text.lines().next().unwrap(), "t,w_min,w_max,F3,F4");
    for line in text.lines().skip(1) {
        for cell in line.split(',') {
            let v: f64 = cell.parse().unwrap();
            assert!(v.is_finite());
        }
    }
}

#[test]
fn compact_exports_score_as_ideal_receptive_fields() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("cw.json");
    run_ok(&[
        "fidelity", "--n", "8", "--w-min", "-3", "--w-max", "21",
        "--export-weights", weights.to_str().unwrap(),
    ]);

    let report_path = dir.path().join("rf.json");
    let csv_path = dir.path().join("rf.csv");
    let fit_path = dir.path().join("fit.json");
    let pgm_path = dir.path().join("w.pgm");
    let stdout = run_ok(&[
        "rf-report", "--weights", weights.to_str().unwrap(),
        "--out", report_path.to_str().unwrap(),
        "--csv", csv_path.to_str().unwrap(),
        "--template-fit", fit_path.to_str().unwrap(),
        "--heatmap-pgm", pgm_path.to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&stdout.stdout).contains("present"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!((report["global_score"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    assert_eq!(report["collisions"], 0);

    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&fit_path).unwrap()).unwrap();
    assert!((fit["w_max_est"].as_f64().unwrap() - 21.0).abs() <= 1e-9);
    assert!((fit["w_min_est"].as_f64().unwrap() + 3.0).abs() <= 1e-9);

    assert_eq!(
        fs::read_to_string(&csv_path).unwrap().lines().count(),
        9 // header + 8 hidden units
    );
    assert!(fs::read_to_string(&pgm_path).unwrap().starts_with("P2"));
}

#[test]
fn unstructured_weights_get_the_absent_verdict() {
    use rand::{Rng, SeedableRng};

    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("noise.json");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
    let w = ndarray::Array2::from_shape_fn((8, 8), |_| rng.gen_range(-1.0..1.0));
    dicke_rbm_core::RbmParameters::new(w, ndarray::Array1::zeros(8), ndarray::Array1::zeros(8))
        .unwrap()
        .write_weights_file(&weights, None)
        .unwrap();

    let out = run_ok(&[
        "rf-report", "--weights", weights.to_str().unwrap(),
        "--out", dir.path().join("rf.json").to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("absent"));
}

#[test]
fn coarse_sector_grids_scale_to_many_qubits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("wide.csv");
    run_ok(&[
        "phase-diagram", "--n", "128",
        "--w-min-start", "-6", "--w-min-stop", "-0.5", "--w-min-count", "20",
        "--w-max-start", "0.5", "--w-max-stop", "200", "--w-max-count", "20",
        "--out", out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 401);
    let classified = text
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(2) != Some("-1"))
        .count();
    assert!(classified > 0, "nothing classified on the coarse grid");
}

#[test]
fn rf_report_rejects_malformed_weight_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = run(&[
        "rf-report", "--weights", bad.to_str().unwrap(),
        "--out", dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(6));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.json"), "error names the file: {stderr}");
    assert!(stderr.contains("line"), "error locates the problem: {stderr}");
}

#[test]
fn scaling_study_writes_one_row_per_width_and_replays_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study.csv");
    run_ok(&[
        "scaling-study", "--n", "4", "--d", "2", "--m-list", "2,4",
        "--samples", "200", "--epochs", "10", "--seed", "8",
        "--out", out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(text.lines().next().unwrap(), "n_hidden,best_fidelity,best_epoch");

    let replay = dir.path().join("study2.csv");
    run_ok(&[
        "scaling-study", "--n", "4", "--d", "2", "--m-list", "2,4",
        "--samples", "200", "--epochs", "10", "--seed", "8",
        "--out", replay.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&replay).unwrap());

    let m = meta(&out);
    assert_eq!(m["command"], "scaling-study");
    assert_eq!(m["parameters"]["m_list"], serde_json::json!([2, 4]));
}

#[test]
fn config_files_supply_defaults_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    let out = dir.path().join("s.txt");
    fs::write(
        &config,
        format!(
            r#"{{"n": 6, "d": 2, "count": 7, "seed": 1, "out": "{}"}}"#,
            out.display()
        ),
    )
    .unwrap();

    run_ok(&["sample", "--config", config.to_str().unwrap(), "--count", "9"]);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 9);
    let m = meta(&out);
    assert_eq!(m["parameters"]["n"], 6); // from the file
    assert_eq!(m["parameters"]["count"], 9); // flag wins
}

#[test]
fn config_files_reject_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    fs::write(&config, r#"{"n": 6, "dd": 2}"#).unwrap();
    let out = run(&["sample", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn missing_required_parameters_name_the_flag() {
    let out = run(&["sample", "--n", "8", "--d", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--out"));
}

#[test]
fn thread_cap_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    run_ok(&[
        "--threads", "1", "phase-diagram", "--n", "4",
        "--w-min-count", "5", "--w-max-count", "5",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 26);
}
