use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use wlee_depth::cli::RootsFile;
use wlee_depth::data::{load_csv, ColumnSelection};
use wlee_depth::estimator::{relative_change, wlee_step};
use wlee_depth::{DepthOptions, ModelParams, SampleDepths, SpdMatrix, WeightConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wlee-depth"))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn generated(dir: &Path) -> PathBuf {
    let path = dir.join("two.csv");
    let out = bin()
        .args(["--generate", "two-cluster", "--seed", "3", "--out-data"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    path
}

fn fit(input: &Path, extra: &[&str], roots: &Path) -> Output {
    bin()
        .arg("--input")
        .arg(input)
        .args(extra)
        .arg("--out-roots")
        .arg(roots)
        .output()
        .unwrap()
}

fn theta(r: &wlee_depth::cli::RootRecord) -> ModelParams {
    ModelParams::new(
        DVector::from_vec(r.mu.clone()),
        SpdMatrix::new(DMatrix::from_row_slice(r.dim, r.dim, &r.sigma)).unwrap(),
    )
    .unwrap()
}

#[test]
fn reported_roots_are_fixed_points_of_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = generated(dir.path());
    let roots = dir.path().join("roots.json");
    let weights = dir.path().join("weights.csv");
    let out = bin()
        .arg("--input")
        .arg(&input)
        .args(["--subsamples", "200", "--seed", "11"])
        .arg("--out-roots")
        .arg(&roots)
        .arg("--out-weights")
        .arg(&weights)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let file: RootsFile = serde_json::from_str(&std::fs::read_to_string(&roots).unwrap()).unwrap();
    assert_eq!(file.meta.n_roots, file.roots.len());
    assert_eq!(
        file.roots.iter().map(|r| r.basin_count).sum::<usize>() + file.meta.n_failed,
        200
    );

    let data = load_csv(&input, &ColumnSelection::All, false).unwrap();
    assert_eq!((file.meta.n, file.meta.p), (data.n(), data.p()));
    let depths = SampleDepths::compute(&data, &DepthOptions::default()).unwrap();
    let cfg = WeightConfig::default();

    let mut table = csv::Reader::from_path(&weights).unwrap();
    let header = table.headers().unwrap().clone();
    assert_eq!(header.len(), file.roots.len() + 1);
    let rows: Vec<Vec<f64>> = table
        .records()
        .map(|r| r.unwrap().iter().map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), data.n());

    for (k, record) in file.roots.iter().enumerate() {
        assert!(record.converged);
        let t = theta(record);
        let (next, w) = wlee_step(&data, &t, &cfg, &depths).unwrap();
        assert!(relative_change(&t, &next) < file.meta.tol * 1.01);
        let sum: f64 = w.iter().sum();
        assert!((sum - record.weight_sum).abs() < 1e-6 * data.n() as f64);
        for (i, row) in rows.iter().enumerate() {
            assert!((row[k + 1] - w[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn zero_subsamples_exits_with_no_roots() {
    let dir = tempfile::tempdir().unwrap();
    let input = generated(dir.path());
    let roots = dir.path().join("roots.json");
    let out = fit(&input, &["--subsamples", "0"], &roots);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_inputs_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = generated(dir.path());
    let roots = dir.path().join("roots.json");

    let out = fit(&input, &["--subsample-size", "1"], &roots);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let missing = dir.path().join("absent.csv");
    assert_eq!(fit(&missing, &[], &roots).status.code(), Some(1));

    let holes = write(dir.path(), "holes.csv", "x,y\n1,2\n3,\n4,5\n6,1\n");
    let out = fit(&holes, &[], &roots);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row"));

    let out = bin().arg("--no-such-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = fit(&input, &["--alpha", "2"], &roots);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn column_selection_and_log_transform() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("id,height,weight\n");
    for i in 0..40 {
        let h = 150.0 + (i * 7 % 40) as f64;
        let w = 50.0 + (i * 11 % 30) as f64;
        body.push_str(&format!("{i},{h},{w}\n"));
    }
    let input = write(dir.path(), "body.csv", &body);
    let roots = dir.path().join("roots.json");
    let out = fit(
        &input,
        &["--columns", "height,2", "--log", "--subsamples", "30"],
        &roots,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let file: RootsFile = serde_json::from_str(&std::fs::read_to_string(&roots).unwrap()).unwrap();
    assert_eq!(file.meta.columns, vec!["height".to_string(), "weight".to_string()]);
    assert!(file.meta.log_transform);
    let mu = &file.roots[0].mu;
    assert!(mu[0] > 150f64.ln() && mu[0] < 190f64.ln());
    assert!(mu[1] > 50f64.ln() && mu[1] < 80f64.ln());

    let out = fit(&input, &["--columns", "shoe"], &roots);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn trivariate_ellipses_have_three_slices() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("three.csv");
    assert!(bin()
        .args(["--generate", "three-cluster", "--seed", "2", "--out-data"])
        .arg(&input)
        .status()
        .unwrap()
        .success());
    let roots = dir.path().join("roots.json");
    let ellipses = dir.path().join("ellipses.csv");
    let out = bin()
        .arg("--input")
        .arg(&input)
        .args(["--subsamples", "40", "--n-dirs", "300", "--ellipse-points", "16"])
        .arg("--out-roots")
        .arg(&roots)
        .arg("--out-ellipses")
        .arg(&ellipses)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let file: RootsFile = serde_json::from_str(&std::fs::read_to_string(&roots).unwrap()).unwrap();
    assert_eq!(file.meta.depth, "approximate");
    assert_eq!(file.meta.n_dirs, Some(300));
    let text = std::fs::read_to_string(&ellipses).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0].split(',').count(), 6);
    assert_eq!(lines.len() - 1, file.roots.len() * 3 * 16);
}
