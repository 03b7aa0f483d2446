//! Command-line front end: ingestion, configuration, execution and output
//! files (roots JSON, ellipse CSV, weights CSV).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, ColumnSelection, Dataset};
use crate::depth::ModelDepthForm;
use crate::error::{Error, Result};
use crate::estimator::FitOptions;
use crate::numerics::ellipsoid_boundary;
use crate::roots::{find_roots, RootSearchConfig, RootSet};
use crate::synth;
use crate::weights::{RafKind, WeightConfig, WeightScheme};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_ROOTS: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    H,
    Raf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RafArg {
    Identity,
    Hellinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelDepthArg {
    ChiSquareTail,
    Halfspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerateArg {
    TwoCluster,
    ThreeCluster,
}

/// Depth-weighted likelihood estimation of multivariate normal location and
/// scatter, reporting every root found from subsample starts.
#[derive(Debug, Clone, Parser)]
#[command(name = "wlee-depth", version)]
pub struct Cli {
    /// Input CSV file (comma separated, optional header row)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Columns to use: header names or zero-based indices, comma separated
    #[arg(long)]
    pub columns: Option<String>,
    /// Apply the natural logarithm to every selected value
    #[arg(long)]
    pub log: bool,
    #[arg(long = "a", default_value_t = 0.05)]
    pub a: f64,
    #[arg(long = "c", default_value_t = 200.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = SchemeArg::H)]
    pub scheme: SchemeArg,
    #[arg(long, value_enum, default_value_t = RafArg::Hellinger)]
    pub raf: RafArg,
    /// Closed form for the normal model depth
    #[arg(long = "model-depth", value_enum, default_value_t = ModelDepthArg::ChiSquareTail)]
    pub model_depth: ModelDepthArg,
    #[arg(long, default_value_t = 500)]
    pub subsamples: usize,
    #[arg(long = "subsample-size", default_value_t = 6)]
    pub subsample_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 500)]
    pub max_iter: usize,
    /// Random projection directions for p >= 3 (default 1000·p)
    #[arg(long = "n-dirs")]
    pub n_dirs: Option<usize>,
    #[arg(long = "dedup-tol", default_value_t = 1e-3)]
    pub dedup_tol: f64,
    #[arg(long = "ellipse-level", default_value_t = 0.95)]
    pub ellipse_level: f64,
    /// Boundary points per ellipse (per slice for p = 3)
    #[arg(long = "ellipse-points", default_value_t = 200)]
    pub ellipse_points: usize,
    /// Roots JSON (stdout when omitted)
    #[arg(long = "out-roots")]
    pub out_roots: Option<PathBuf>,
    #[arg(long = "out-ellipses")]
    pub out_ellipses: Option<PathBuf>,
    #[arg(long = "out-weights")]
    pub out_weights: Option<PathBuf>,
    /// Write a synthetic dataset instead of fitting
    #[arg(long, value_enum)]
    pub generate: Option<GenerateArg>,
    /// Destination of --generate (stdout when omitted)
    #[arg(long = "out-data")]
    pub out_data: Option<PathBuf>,
}

impl Cli {
    pub fn weight_config(&self) -> WeightConfig {
        WeightConfig {
            a: self.a,
            c: self.c,
            alpha: self.alpha,
            scheme: match self.scheme {
                SchemeArg::H => WeightScheme::HFunction,
                SchemeArg::Raf => WeightScheme::Raf,
            },
            raf_kind: match self.raf {
                RafArg::Identity => RafKind::Identity,
                RafArg::Hellinger => RafKind::Hellinger,
            },
            model_depth: match self.model_depth {
                ModelDepthArg::Halfspace => ModelDepthForm::Halfspace,
                ModelDepthArg::ChiSquareTail => ModelDepthForm::ChiSquareTail,
            },
            ..WeightConfig::default()
        }
    }

    pub fn root_config(&self) -> RootSearchConfig {
        RootSearchConfig {
            n_subsamples: self.subsamples,
            subsample_size: self.subsample_size,
            seed: self.seed,
            dedup_tol: self.dedup_tol,
            fit: FitOptions {
                tol: self.tol,
                max_iter: self.max_iter,
            },
            n_dirs: self.n_dirs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub timestamp: u64,
    pub version: String,
    pub input: Option<String>,
    pub columns: Vec<String>,
    pub log_transform: bool,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub depth_floor: f64,
    pub scheme: WeightScheme,
    pub raf: RafKind,
    pub model_depth: ModelDepthForm,
    pub n_subsamples: usize,
    pub subsample_size: usize,
    pub dedup_tol: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub depth: String,
    pub n_dirs: Option<usize>,
    pub ellipse_level: f64,
    pub n_roots: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootRecord {
    pub id: usize,
    pub mu: Vec<f64>,
    /// Row-major, `dim × dim`.
    pub sigma: Vec<f64>,
    pub dim: usize,
    pub basin_count: usize,
    pub weight_sum: f64,
    pub weighted_loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootsFile {
    pub meta: RunMeta,
    pub roots: Vec<RootRecord>,
}

fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn roots_file(cli: &Cli, data: &Dataset, set: &RootSet) -> RootsFile {
    let w = cli.weight_config();
    let p = data.p();
    let meta = RunMeta {
        timestamp: unix_time(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        input: cli.input.as_ref().map(|p| p.display().to_string()),
        columns: data.columns().to_vec(),
        log_transform: cli.log,
        n: data.n(),
        p,
        seed: cli.seed,
        a: w.a,
        c: w.c,
        alpha: w.alpha,
        depth_floor: w.depth_floor,
        scheme: w.scheme,
        raf: w.raf_kind,
        model_depth: w.model_depth,
        n_subsamples: cli.subsamples,
        subsample_size: cli.subsample_size,
        dedup_tol: cli.dedup_tol,
        tol: cli.tol,
        max_iter: cli.max_iter,
        depth: if p <= 2 { "exact" } else { "approximate" }.to_string(),
        n_dirs: (p > 2).then(|| cli.n_dirs.unwrap_or(1000 * p)),
        ellipse_level: cli.ellipse_level,
        n_roots: set.len(),
        n_failed: set.n_failed,
    };
    let roots = set
        .roots
        .iter()
        .zip(&set.basin_counts)
        .enumerate()
        .map(|(id, (fit, &basin_count))| RootRecord {
            id,
            mu: fit.theta.mu.iter().copied().collect(),
            sigma: fit.theta.sigma.matrix().transpose().iter().copied().collect(),
            dim: p,
            basin_count,
            weight_sum: fit.weight_sum,
            weighted_loglik: fit.weighted_loglik,
            iterations: fit.iterations,
            converged: fit.converged,
        })
        .collect();
    RootsFile { meta, roots }
}

pub fn ellipses_csv(data: &Dataset, set: &RootSet, level: f64, n_points: usize) -> Result<String> {
    let mut out = String::from("root_id,slice,point_index");
    for c in data.columns() {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (id, fit) in set.roots.iter().enumerate() {
        let b = ellipsoid_boundary(&fit.theta, level, n_points)?;
        for (s, slice) in b.slices.iter().enumerate() {
            for (k, z) in slice.iter().enumerate() {
                write!(out, "{id},{s},{k}").unwrap();
                for v in z.iter() {
                    write!(out, ",{v}").unwrap();
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

pub fn weights_csv(data: &Dataset, set: &RootSet) -> String {
    let mut out = String::from("index");
    for id in 0..set.len() {
        write!(out, ",root_{id}").unwrap();
    }
    out.push('\n');
    for i in 0..data.n() {
        write!(out, "{i}").unwrap();
        for fit in &set.roots {
            write!(out, ",{}", fit.weights[i]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn dataset_csv(data: &Dataset) -> String {
    let mut out = data.columns().join(",");
    out.push('\n');
    for row in data.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes())?;
            Ok(())
        }
    }
}

/// Outcome of a successful invocation.
#[derive(Debug)]
pub enum Outcome {
    Generated(Dataset),
    Fitted { data: Dataset, roots: RootSet },
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    if let Some(kind) = cli.generate {
        let data = match kind {
            GenerateArg::TwoCluster => synth::two_cluster(cli.seed),
            GenerateArg::ThreeCluster => synth::three_cluster(cli.seed),
        };
        write_output(cli.out_data.as_deref(), &dataset_csv(&data))?;
        return Ok(Outcome::Generated(data));
    }

    let input = cli
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("--input is required unless --generate is given".into()))?;
    let columns = cli.columns.as_deref().map(ColumnSelection::parse).unwrap_or_default();
    let data = load_csv(input, &columns, cli.log)?;

    let wconfig = cli.weight_config();
    let rconfig = cli.root_config();
    wconfig.validate()?;
    rconfig.validate(data.n(), data.p())?;
    if !(cli.ellipse_level > 0.0 && cli.ellipse_level < 1.0) {
        return Err(Error::Config(format!(
            "ellipse level must lie in (0, 1), got {}",
            cli.ellipse_level
        )));
    }

    let set = find_roots(&data, &wconfig, &rconfig)?;

    let file = roots_file(cli, &data, &set);
    let json = serde_json::to_string_pretty(&file).map_err(|e| Error::Io(e.to_string()))? + "\n";
    write_output(cli.out_roots.as_deref(), &json)?;

    if let Some(path) = &cli.out_ellipses {
        if matches!(data.p(), 2 | 3) {
            write_output(
                Some(path),
                &ellipses_csv(&data, &set, cli.ellipse_level, cli.ellipse_points)?,
            )?;
        } else {
            eprintln!(
                "wlee-depth: ellipses are only produced for p = 2 or 3 (p = {}); skipping",
                data.p()
            );
        }
    }
    if let Some(path) = &cli.out_weights {
        write_output(Some(path), &weights_csv(&data, &set))?;
    }
    Ok(Outcome::Fitted { data, roots: set })
}

/// Runs the CLI and maps the outcome to an exit status.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(Outcome::Generated(_)) => EXIT_OK,
        Ok(Outcome::Fitted { roots, .. }) => {
            eprintln!(
                "wlee-depth: {} root(s), {} failed start(s)",
                roots.len(),
                roots.n_failed
            );
            if roots.is_empty() {
                EXIT_NO_ROOTS
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("wlee-depth: {e}");
            EXIT_USAGE
        }
    }
}
