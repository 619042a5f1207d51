//! End-to-end tests driving the compiled binary through the full pipeline,
//! plus the exit-code and config-precedence contracts.

use std::fs;
use std::path::Path;
use std::process::Command;

use infomax::ingest::{write_pgm, ImageGray};
use infomax::io::mat1::{read_matrix, write_matrix};
use ndarray::Array2;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_infomax"))
}

/// Deterministic pseudo-noise in (-1, 1); replaces an RNG so images are
/// reproducible across test runs without a seed dependency.
fn hash_noise(x: usize, y: usize, salt: f64) -> f64 {
    ((x as f64 * 12.9898 + y as f64 * 78.233 + salt).sin() * 43758.5453).fract()
}

/// Smooth waves plus a small dither; the dither keeps the patch covariance
/// full-rank so whitening at threshold 1.0 retains every direction.
fn texture(width: usize, height: usize) -> Vec<f64> {
    (0..width * height)
        .map(|i| {
            let (x, y) = (i % width, i / width);
            let v = 0.5
                + 0.25 * (0.55 * x as f64).sin() * (0.31 * y as f64).cos()
                + 0.12 * (0.17 * (x as f64 + 2.0 * y as f64)).sin()
                + 0.05 * hash_noise(x, y, 0.0);
            v.clamp(0.0, 1.0)
        })
        .collect()
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed with {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout is utf-8")
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output().expect("binary runs").status.code().expect("no signal")
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).expect("manifest exists")).expect("valid JSON")
}

/// Value of a `key = value` line printed by a command.
fn stdout_field(stdout: &str, key: &str) -> String {
    let prefix = format!("{} = ", key);
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{}` line in:\n{}", key, stdout))
        .to_string()
}

/// (epoch, cfe_bits, cde_nats) of the last metrics CSV row.
fn last_metrics_row(path: &Path) -> (usize, f64, f64) {
    let text = fs::read_to_string(path).expect("metrics csv exists");
    let row = text.lines().last().expect("csv has rows");
    let fields: Vec<&str> = row.split(',').collect();
    (
        fields[0].parse().expect("epoch"),
        fields[1].parse().expect("cfe"),
        fields[2].parse().expect("cde"),
    )
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let clean_pixels = texture(96, 96);
    let noisy_pixels: Vec<f64> = clean_pixels
        .iter()
        .enumerate()
        .map(|(i, &v)| (v + 0.12 * hash_noise(i % 96, i / 96, 7.0)).clamp(0.0, 1.0))
        .collect();
    let img = root.join("scene.pgm");
    let noisy_img = root.join("noisy.pgm");
    write_pgm(&img, &ImageGray::new(96, 96, clean_pixels).unwrap()).unwrap();
    write_pgm(&noisy_img, &ImageGray::new(96, 96, noisy_pixels).unwrap()).unwrap();

    let patches = root.join("patches.mat1");
    let out = run_ok(
        bin()
            .arg("sample")
            .arg("--images")
            .arg(&img)
            .args(["--patch-width", "4", "--count", "800", "--seed", "11"])
            .arg("--out")
            .arg(&patches),
    );
    assert_eq!(stdout_field(&out, "patches"), "16x800");
    assert_eq!(read_matrix(&patches).unwrap().dim(), (16, 800));
    let m = manifest(&root.join("patches.mat1.manifest.json"));
    assert_eq!(m["command"], "sample");
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    let run_dir = root.join("run");
    let out = run_ok(
        bin()
            .arg("train")
            .arg("--patches")
            .arg(&patches)
            .args(["--k1", "16", "--epsilon", "1.0", "--epochs", "8", "--t0", "5"])
            .args(["--seed", "3", "--metrics-every", "--n", "1500"])
            .arg("--out-dir")
            .arg(&run_dir),
    );
    assert_eq!(stdout_field(&out, "alg"), "alg1");
    assert_eq!(stdout_field(&out, "epochs_run"), "8");
    for name in [
        "checkpoint.picp",
        "whitening.piwm",
        "history.csv",
        "filters.pgm",
        "metrics.csv",
        "train.manifest.json",
    ] {
        assert!(run_dir.join(name).exists(), "missing {}", name);
    }
    let m = manifest(&run_dir.join("train.manifest.json"));
    assert_eq!(m["seed"], 3);
    // A bare --metrics-every means the default cadence of 10.
    assert_eq!(m["config"]["metrics-every"], 10);

    // One history row per epoch; full-batch descent never increases.
    let history = fs::read_to_string(run_dir.join("history.csv")).unwrap();
    let objectives: Vec<f64> = history
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(objectives.len(), 8);
    assert!(objectives.windows(2).all(|w| w[1] <= w[0] + 1e-12));

    // The metrics command recomputes the trainer's final row from the
    // checkpoint; storage rounds the bank to f32, so allow a small drift.
    let csv = root.join("metrics.csv");
    let out = run_ok(
        bin()
            .arg("metrics")
            .arg("--checkpoint")
            .arg(run_dir.join("checkpoint.picp"))
            .arg("--whitening")
            .arg(run_dir.join("whitening.piwm"))
            .arg("--patches")
            .arg(&patches)
            .args(["--n", "1500"])
            .arg("--out")
            .arg(&csv),
    );
    assert_eq!(stdout_field(&out, "epoch"), "8");
    let trained = last_metrics_row(&run_dir.join("metrics.csv"));
    let measured = last_metrics_row(&csv);
    assert_eq!(measured.0, 8);
    assert!((measured.1 - trained.1).abs() <= 1e-3 * trained.1.abs());
    assert!((measured.2 - trained.2).abs() <= 1e-3 * trained.2.abs());

    let exp = root.join("exp");
    run_ok(
        bin()
            .arg("export")
            .arg("--checkpoint")
            .arg(run_dir.join("checkpoint.picp"))
            .arg("--whitening")
            .arg(run_dir.join("whitening.piwm"))
            .arg("--out-dir")
            .arg(&exp),
    );
    for name in [
        "bases.pgm",
        "bases.mat1",
        "filters.pgm",
        "filters.mat1",
        "export.manifest.json",
    ] {
        assert!(exp.join(name).exists(), "missing {}", name);
    }
    assert_eq!(read_matrix(&exp.join("bases.mat1")).unwrap().dim(), (16, 16));

    let denoised = root.join("denoised.pgm");
    let out = run_ok(
        bin()
            .arg("denoise")
            .arg("--clean")
            .arg(&img)
            .arg("--noisy")
            .arg(&noisy_img)
            .args(["--patch-width", "5", "--epsilon", "0.97", "--epochs", "20"])
            .args(["--t0", "10", "--seed", "1"])
            .arg("--out")
            .arg(&denoised),
    );
    let before: f64 = stdout_field(&out, "rmse_noisy_vs_clean").parse().unwrap();
    let after: f64 = stdout_field(&out, "rmse_denoised_vs_clean").parse().unwrap();
    assert!(after < before, "denoising did not reduce error: {} vs {}", after, before);
    assert!(denoised.exists());
    assert!(root.join("denoised.pgm.manifest.json").exists());
}

#[test]
fn training_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let img = root.join("scene.pgm");
    write_pgm(&img, &ImageGray::new(64, 64, texture(64, 64)).unwrap()).unwrap();

    let patches = root.join("patches.mat1");
    run_ok(
        bin()
            .arg("sample")
            .arg("--images")
            .arg(&img)
            .args(["--patch-width", "4", "--count", "600", "--seed", "5"])
            .arg("--out")
            .arg(&patches),
    );

    let train = |out_dir: &Path| {
        run_ok(
            bin()
                .arg("train")
                .arg("--patches")
                .arg(&patches)
                .args(["--k1", "16", "--epsilon", "1.0", "--epochs", "6", "--t0", "4", "--seed", "9"])
                .arg("--out-dir")
                .arg(out_dir),
        );
    };
    let (a, b) = (root.join("a"), root.join("b"));
    train(&a);
    train(&b);

    for name in ["checkpoint.picp", "whitening.piwm", "history.csv", "filters.pgm"] {
        // wall_seconds makes history differ; compare it without that column.
        if name == "history.csv" {
            let strip = |p: &Path| -> Vec<String> {
                fs::read_to_string(p)
                    .unwrap()
                    .lines()
                    .map(|l| l.rsplit_once(',').unwrap().0.to_string())
                    .collect()
            };
            assert_eq!(strip(&a.join(name)), strip(&b.join(name)));
        } else {
            assert_eq!(
                fs::read(a.join(name)).unwrap(),
                fs::read(b.join(name)).unwrap(),
                "{} differs between identical runs",
                name
            );
        }
    }
}

#[test]
fn exit_codes_separate_failure_classes() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let valid = root.join("valid.mat1");
    let noise = Array2::from_shape_fn((16, 400), |(i, j)| 0.5 + 0.3 * hash_noise(i, j, 3.0));
    write_matrix(&valid, &noise).unwrap();

    // Flag parse failures are usage errors.
    assert_eq!(exit_code(bin().args(["train", "--bogus"])), 2);

    // So are config-file problems, reported before any work starts.
    let conf = root.join("bad.conf");
    fs::write(&conf, "not-a-knob = 3\n").unwrap();
    assert_eq!(
        exit_code(
            bin()
                .arg("--config")
                .arg(&conf)
                .args(["train", "--patches"])
                .arg(&valid)
        ),
        2
    );

    // And the exact-objective size refusal.
    assert_eq!(
        exit_code(
            bin()
                .args(["train", "--alg", "exact", "--k1", "9000", "--patches"])
                .arg(&valid)
                .arg("--out-dir")
                .arg(root)
        ),
        2
    );

    // A missing input is an application error.
    assert_eq!(
        exit_code(bin().args(["train", "--patches"]).arg(root.join("absent.mat1"))),
        3
    );

    // Constant patches have a zero covariance spectrum: a numerical failure.
    let constant = root.join("const.mat1");
    write_matrix(&constant, &Array2::from_elem((16, 50), 0.5)).unwrap();
    let out = bin()
        .args(["train", "--patches"])
        .arg(&constant)
        .arg("--out-dir")
        .arg(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:"), "diagnostic not single-line: {}", stderr);
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let patches = root.join("patches.mat1");
    let noise = Array2::from_shape_fn((16, 300), |(i, j)| 0.5 + 0.3 * hash_noise(i, j, 1.0));
    write_matrix(&patches, &noise).unwrap();

    let conf = root.join("run.conf");
    fs::write(&conf, "epsilon = 0.9\nk1 = 16\nt0 = 2\n").unwrap();

    let run = |extra: &[&str], out_dir: &Path| -> Value {
        run_ok(
            bin()
                .arg("--config")
                .arg(&conf)
                .args(["train", "--epochs", "3", "--patches"])
                .arg(&patches)
                .args(extra)
                .arg("--out-dir")
                .arg(out_dir),
        );
        manifest(&out_dir.join("train.manifest.json"))
    };

    let m = run(&[], &root.join("from_config"));
    assert_eq!(m["config"]["epsilon"], 0.9);
    assert_eq!(m["config"]["k1"], 16);
    assert_eq!(m["config"]["t0"], 2);

    let m = run(&["--epsilon", "1.0"], &root.join("flag_wins"));
    assert_eq!(m["config"]["epsilon"], 1.0);
    assert_eq!(m["config"]["k1"], 16);
}
