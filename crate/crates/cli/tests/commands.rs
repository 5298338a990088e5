use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qkernel_cli::kernels::read_kernel_csv;
use tempfile::TempDir;

fn qkernel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkernel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path
}

fn run_ok(config: &Path, out: &Path, sub: &str) {
    let o = qkernel(&[
        sub,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        o.status.success(),
        "{sub} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read(path: PathBuf) -> String {
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().to_string())
        .collect()
}

fn numbers(csv: &str, name: &str) -> Vec<f64> {
    column(csv, name).iter().map(|v| v.parse().unwrap()).collect()
}

#[test]
fn data_writes_deterministic_synthetic_cache() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"num_qubits": 4, "n_train": 30, "n_test": 10, "seed": 3}"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_ok(&cfg, &a, "data");
    run_ok(&cfg, &b, "data");
    let train = read(a.join("train_features.csv"));
    let test = read(a.join("test_features.csv"));
    assert!(train.starts_with("id,y,x1,x2,x3,x4\n"));
    assert_eq!(train.lines().count() + test.lines().count() - 2, 40);
    for line in train.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        let y: f64 = fields[1].parse().unwrap();
        assert!(y == 1.0 || y == -1.0);
    }
    for f in ["train_features.csv", "test_features.csv", "data_manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&read(a.join("data_manifest.json"))).unwrap();
    assert_eq!(manifest["dataset"], "synthetic");
    assert_eq!(manifest["seed"], 3);
}

#[test]
fn kernel_files_are_consistent() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"num_qubits": 3, "n_train": 3, "n_test": 2, "layers": [1, 4], "shots": 100000}"#,
    );
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, "data");
    run_ok(&cfg, &out, "kernel");
    let load = |stem: &str| read_kernel_csv(fs::File::open(out.join(format!("{stem}.csv"))).unwrap()).unwrap();
    let ideal = load("kernel_ideal");
    assert_eq!(ideal.shape(), (3, 3));
    assert_eq!(ideal, ideal.transpose());
    assert!(ideal.diagonal().iter().all(|&v| v == 1.0));

    for layers in [1usize, 4] {
        let p = 1.0 - 0.9f64.powi(2 * layers as i32);
        let noisy = load(&format!("kernel_noisy_L{layers}"));
        let recomputed = ideal.map(|k| (1.0 - p) * k + p / 8.0);
        assert!((noisy.clone() - recomputed).amax() < 1e-14);
        let header: serde_json::Value =
            serde_json::from_str(&read(out.join(format!("kernel_noisy_L{layers}.json")))).unwrap();
        assert_eq!(header["kind"], "noisy");
        assert!((header["p"].as_f64().unwrap() - p).abs() < 1e-14);

        let est = load(&format!("kernel_estimated_L{layers}"));
        assert_eq!(est, est.transpose());
        for (e, k) in est.iter().zip(noisy.iter()) {
            let sigma = (k * (1.0 - k) / 1e5).sqrt();
            assert!((e - k).abs() <= 4.0 * sigma.max(1e-12), "{e} vs {k}");
        }
    }
}

#[test]
fn fully_depolarized_kernel_is_flat() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"num_qubits": 3, "n_train": 4, "n_test": 2, "layer_rate": 1.0, "layers": [1]}"#,
    );
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, "data");
    run_ok(&cfg, &out, "kernel");
    let k = read_kernel_csv(fs::File::open(out.join("kernel_noisy_L1.csv")).unwrap()).unwrap();
    assert!(k.iter().all(|&v| v == 0.125));
}

#[test]
fn sweep_rows_are_internally_consistent() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"num_qubits": 5, "n_train": 60, "n_test": 30, "layers": {"start": 2, "end": 20, "step": 6}, "lambda": 0.3}"#,
    );
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, "sweep");
    let csv = read(out.join("sweep.csv"));
    assert_eq!(column(&csv, "L"), ["2", "8", "14", "20"]);
    let diff = numbers(&csv, "empirical_difference");
    let m = numbers(&csv, "geometric_difference");
    let lemma2 = numbers(&csv, "lemma2_bound");
    for i in 0..diff.len() {
        assert!(diff[i] <= 0.3 * m[i] + 1e-12);
        assert!(0.3 * m[i] <= lemma2[i]);
    }
    for name in ["train_error", "test_error", "hbar_train_error", "hbar_test_error"] {
        assert!(numbers(&csv, name).iter().all(|e| (0.0..=1.0).contains(e)));
    }
    assert!(column(&csv, "theorem2_bound").iter().all(String::is_empty));

    let hist = read(out.join("sweep_histogram.csv"));
    assert!(hist.starts_with("L,bin_lo,bin_hi,count,relative_frequency\n"));
    assert_eq!(hist.lines().count(), 1 + 4 * 20);
    let counts = numbers(&hist, "count");
    assert_eq!(counts.iter().sum::<f64>(), 4.0 * 30.0);

    let summary: serde_json::Value = serde_json::from_str(&read(out.join("sweep_summary.json"))).unwrap();
    let l_star = summary["demarcation_layers"].as_f64().unwrap();
    assert!((l_star - 60f64.ln() / (-2.0 * 0.9f64.ln())).abs() < 1e-12);
}

#[test]
fn sweep_with_many_shots_tracks_noisy_columns() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"num_qubits": 4, "n_train": 40, "n_test": 20, "layers": [1, 3], "shots": 1000000}"#,
    );
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, "sweep");
    let csv = read(out.join("sweep.csv"));
    assert_eq!(numbers(&csv, "est_train_error"), numbers(&csv, "train_error"));
    assert_eq!(numbers(&csv, "est_test_error"), numbers(&csv, "test_error"));
    for (e, h) in numbers(&csv, "est_h_mean").iter().zip(numbers(&csv, "h_mean")) {
        assert!((e - h).abs() < 0.02, "{e} vs {h}");
    }
    assert!(column(&csv, "theorem2_bound").iter().all(|v| !v.is_empty()));
    assert_eq!(column(&csv, "est_indefinite"), ["false", "false"]);
}

#[test]
fn bounds_grid_has_endpoint_and_fixtures() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"layers": [8, 40], "bound_shots": [250000, 1000000000000]}"#);
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, "bounds");
    let csv = read(out.join("bounds.csv"));
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    let rates = column(&csv, "layer_rate");
    let p = numbers(&csv, "p");
    assert_eq!(p[4], 1.0);
    assert_eq!(rates[5].parse::<f64>().unwrap(), 1.0);

    // L = 8 is vacuous
    assert_eq!(column(&csv, "theorem1_bound")[0], "uninformative");

    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let at = |r: usize, name: &str| -> f64 {
        rows[r][header.iter().position(|h| *h == name).unwrap()].parse().unwrap()
    };
    // L = 40, m = 1e12 (mpmath fixtures)
    assert!((at(3, "theorem1_bound") - 13.172404570842444).abs() < 1e-9);
    assert!((at(3, "theorem2_bound") - at(3, "theorem1_bound") - 0.104533556428569).abs() < 1e-9);
    assert!(at(3, "corollary1_dimension_term") < at(3, "theorem1_dimension_term"));
    // m = n^2 shot term
    assert!((at(2, "shot_term") - 6.0697085175405854).abs() < 1e-10);
    // fully depolarized endpoint: only the tail terms remain
    assert_eq!(at(4, "z"), 0.0);
    assert!(
        (at(4, "theorem1_bound") - at(4, "theorem1_dimension_term") - at(4, "theorem1_confidence_term"))
            .abs()
            < 1e-15
    );
}

#[test]
fn regions_thresholds() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"region_sizes": [500], "region_layers": {"start": 28, "end": 31}}"#,
    );
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, "regions");
    let csv = read(out.join("regions.csv"));
    assert!(csv.starts_with("n,L,layer_rate,num_qubits,threshold_layers,verdict,regime,always_fails\n"));
    let l_star = numbers(&csv, "threshold_layers");
    assert!((l_star[0] - 29.49).abs() < 0.01);
    assert_eq!(
        column(&csv, "verdict"),
        ["uninformative_yellow", "uninformative_yellow", "fail_red", "fail_red"]
    );

    let cfg = write_config(
        tmp.path(),
        r#"{"num_qubits": 20, "layer_rate": 0.01, "region_sizes": [1048576], "region_layers": [1]}"#,
    );
    run_ok(&cfg, &out, "regions");
    let l_star = numbers(&read(out.join("regions.csv")), "threshold_layers")[0];
    assert!((l_star - 689.67563936528493).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();
    let code = |json: &str, sub: &str| {
        let cfg = write_config(tmp.path(), json);
        qkernel(&[sub, "--config", cfg.to_str().unwrap(), "--out", out_s])
            .status
            .code()
    };
    assert_eq!(code(r#"{"layers": [0, 8]}"#, "sweep"), Some(2));
    assert_eq!(code(r#"{"unknown_key": 1}"#, "bounds"), Some(2));
    assert_eq!(code(r#"{"layer_rate": 1.0}"#, "regions"), Some(2));
    assert_eq!(code("not json", "bounds"), Some(2));
    assert_eq!(
        code(
            r#"{"dataset": {"kind": "fashion_mnist", "images": "/nonexistent/i", "labels": "/nonexistent/l"}}"#,
            "data"
        ),
        Some(3)
    );
    // kernel needs the feature cache
    assert_eq!(code("{}", "kernel"), Some(3));
    assert_eq!(
        qkernel(&["bounds", "--threads", "0", "--out", out_s]).status.code(),
        Some(2)
    );
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"num_qubits": 3, "n_train": 10, "n_test": 4}"#);
    let out = tmp.path().join("out");
    let o = qkernel(&["data", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "41"]);
    assert!(o.status.success());
    let manifest: serde_json::Value = serde_json::from_str(&read(out.join("data_manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 41);
}

#[test]
fn fashion_path_reads_idx_archives() {
    use qkernel_core::data::idx::{encode_images, encode_labels};
    use qkernel_core::data::RawImageSet;

    let tmp = TempDir::new().unwrap();
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 0..48u32 {
        let class = [3u8, 6, 1][i as usize % 3];
        for p in 0..16u32 {
            let on = if class == 3 { p % 4 < 2 } else { p < 8 };
            pixels.push(if on { 180 + (i * 7 + p) % 50 } else { (i * 13 + p) % 40 } as u8);
        }
        labels.push(class);
    }
    let raw = RawImageSet::new(4, 4, pixels, labels).unwrap();
    let images = tmp.path().join("images-idx3-ubyte");
    let labels = tmp.path().join("labels-idx1-ubyte");
    fs::write(&images, encode_images(&raw)).unwrap();
    fs::write(&labels, encode_labels(&raw)).unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(
            r#"{{"dataset": {{"kind": "fashion_mnist", "images": {:?}, "labels": {:?}}},
                "num_qubits": 3, "n_train": 16, "n_test": 8, "balance": true, "layers": [1, 30]}}"#,
            images.to_str().unwrap(),
            labels.to_str().unwrap()
        ),
    );
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, "data");
    let train = read(out.join("train_features.csv"));
    assert_eq!(train.lines().count(), 17);
    let y = numbers(&train, "y");
    assert_eq!(y.iter().sum::<f64>(), 0.0);
    for name in ["x1", "x2", "x3"] {
        let xs = numbers(&train, name);
        let max = xs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((max - 1.0).abs() < 1e-12, "{name} max {max}");
    }
    // ids point back into the archive and never name the distractor class
    for id in numbers(&train, "id") {
        assert_ne!(id as usize % 3, 2);
    }
    run_ok(&cfg, &out, "sweep");
    let manifest: serde_json::Value = serde_json::from_str(&read(out.join("data_manifest.json"))).unwrap();
    assert_eq!(manifest["dataset"], "fashion_mnist");
    assert_eq!(read(out.join("sweep.csv")).lines().count(), 3);
}
