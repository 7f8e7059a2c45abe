//! Command implementations behind the `corrhub` binary.
//!
//! Exit codes: 0 alarm or success, 1 stream ended without alarm (or a failed
//! validation), 2 usage error, 3 data error.

pub mod config;
pub mod detect;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use corrhub::sim::{
    ground_truth, gen_rowsparse_cov, monte_carlo, validate::NullSuite, CovarianceSpec, McPlan, Scenario, Simulator,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use config::RunConfig;
pub use detect::{run_detect, DetectReport, Source};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 3,
        }
    }
}

pub(crate) fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn usage_err(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| data_err(format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| data_err(format!("cannot create {}: {e}", path.display())))
}

/// Writes `text` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let res = match path {
        Some(p) => create(p)?.write_all(text.as_bytes()),
        None => io::stdout().lock().write_all(text.as_bytes()),
    };
    res.map_err(data_err)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Runs `detect` over the configured inputs (stdin when there are none).
pub fn cmd_detect(cfg: &RunConfig) -> Result<i32, CliError> {
    let sources = if cfg.input.is_empty() {
        vec![Source::new("<stdin>", Box::new(io::stdin()))]
    } else {
        cfg.input
            .iter()
            .map(|p| {
                File::open(p)
                    .map(|f| Source::new(p.display().to_string(), Box::new(io::BufReader::new(f))))
                    .map_err(|e| usage_err(format!("cannot open {}: {e}", p.display())))
            })
            .collect::<Result<_, _>>()?
    };
    let report = run_detect(cfg, sources)?;
    let json = serde_json::to_string_pretty(&report).map_err(data_err)? + "\n";
    emit(cfg.output.as_deref(), &json)?;
    Ok(if report.tau_hb.is_some() { 0 } else { 1 })
}

/// Covariance metadata written next to the matrix by `gen-cov`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovMetadata {
    pub p: usize,
    pub j: usize,
    pub seed: u64,
    pub diag_boost: f64,
    pub partner_sum: usize,
    /// Multiple of the identity actually added.
    pub boost: f64,
    pub warnings: Vec<String>,
    pub n: usize,
    pub calib_batches: usize,
    /// Seed of the calibration batches.
    pub calib_seed: u64,
    /// Population hubs, 1-based.
    pub hubs: Vec<usize>,
    pub j_estimates: Vec<f64>,
    pub theta: f64,
}

/// The covariance specification selected by the config.
pub fn covariance_spec(cfg: &RunConfig) -> Result<CovarianceSpec, CliError> {
    if let Some(id) = cfg.scenario {
        let sc = Scenario::preset(id).map_err(usage_err)?;
        match sc.post {
            corrhub::sim::PostChange::Generated(spec) => return Ok(spec),
            corrhub::sim::PostChange::Matrix(_) => unreachable!("presets are generated"),
        }
    }
    let p = cfg.p.unwrap_or(100);
    let mut spec = CovarianceSpec::new(p, cfg.j, cfg.seed);
    spec.diag_boost = cfg.diag_boost;
    if let Some(ps) = cfg.partner_sum {
        spec.partner_sum = ps;
    }
    Ok(spec)
}

/// Writes `<output>.csv` (the matrix) and `<output>.json` (metadata).
pub fn cmd_gen_cov(cfg: &RunConfig) -> Result<i32, CliError> {
    let spec = covariance_spec(cfg)?;
    let generated = gen_rowsparse_cov(&spec).map_err(|e| match e {
        corrhub::Error::Domain(_) => usage_err(e),
        _ => data_err(e),
    })?;
    for w in &generated.warnings {
        eprintln!("warning: {w}");
    }
    let gt = ground_truth(&generated.sigma, cfg.n, cfg.calib_batches, spec.seed).map_err(usage_err)?;
    let prefix = cfg.output.clone().unwrap_or_else(|| PathBuf::from("covariance"));
    write_matrix(&with_suffix(&prefix, ".csv"), &generated.sigma)?;
    let meta = CovMetadata {
        p: spec.p,
        j: spec.j,
        seed: spec.seed,
        diag_boost: spec.diag_boost,
        partner_sum: spec.partner_sum,
        boost: generated.boost,
        warnings: generated.warnings,
        n: cfg.n,
        calib_batches: cfg.calib_batches,
        calib_seed: spec.seed,
        hubs: gt.hubs,
        j_estimates: gt.j,
        theta: gt.theta,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(data_err)? + "\n";
    emit(Some(&with_suffix(&prefix, ".json")), &json)?;
    Ok(0)
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|c| m[(r, c)].to_string())).map_err(data_err)?;
    }
    w.flush().map_err(data_err)
}

/// Reads a square matrix written by [`write_matrix`].
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| usage_err(format!("cannot open {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(data_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|_| data_err(format!("{}:{line}: '{f}' is not a number", path.display()))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let p = rows.len();
    if p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(data_err(format!("{} does not hold a square matrix", path.display())));
    }
    Ok(DMatrix::from_fn(p, p, |r, c| rows[r][c]))
}

/// The simulation scenario selected by the config.
pub fn scenario(cfg: &RunConfig) -> Result<Scenario, CliError> {
    let spec = covariance_spec(cfg)?;
    if let Some(p) = cfg.p {
        if p != spec.p {
            return Err(usage_err(format!("p = {p} conflicts with the scenario dimension {}", spec.p)));
        }
    }
    let mut sc = Scenario::generated(cfg.n, spec, cfg.detector(), cfg.seed);
    sc.gamma = cfg.gamma;
    sc.paths = cfg.paths.max(1);
    sc.cap = cfg.cap;
    sc.mean_shift = cfg.mean_shift;
    sc.validate().map_err(usage_err)?;
    Ok(sc)
}

/// Writes `<output>_isolation.csv` and `<output>_mfa_delay.csv`.
pub fn cmd_curves(cfg: &RunConfig) -> Result<i32, CliError> {
    let sc = scenario(cfg)?;
    let sim = Simulator::new(&sc).map_err(data_err)?;
    let plan = McPlan { isolation_paths: cfg.paths, delay_paths: cfg.delay_paths, mfa_paths: cfg.mfa_paths };
    let metrics = monte_carlo(&sim, &cfg.thresholds, plan).map_err(usage_err)?;
    let prefix = cfg.output.clone().unwrap_or_else(|| PathBuf::from("curves"));
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());

    let mut iso = csv::Writer::from_writer(create(&with_suffix(&prefix, "_isolation.csv"))?);
    iso.write_record(["threshold", "false_isolation_count", "rate", "paths"]).map_err(data_err)?;
    for r in &metrics.rows {
        iso.write_record([
            r.threshold.to_string(),
            r.false_isolation_count.to_string(),
            opt(r.false_isolation_rate()),
            r.isolation_paths.to_string(),
        ])
        .map_err(data_err)?;
    }
    iso.flush().map_err(data_err)?;

    let mut md = csv::Writer::from_writer(create(&with_suffix(&prefix, "_mfa_delay.csv"))?);
    md.write_record(["threshold", "ln_mfa", "mean_delay", "censored_count"]).map_err(data_err)?;
    for r in &metrics.rows {
        md.write_record([
            r.threshold.to_string(),
            opt(r.ln_mfa()),
            opt(r.delay.map(|d| d.mean)),
            r.mfa.map_or(0, |m| m.censored).to_string(),
        ])
        .map_err(data_err)?;
        if let Some(d) = r.delay.filter(|d| d.censored > 0) {
            eprintln!("warning: {} delay paths censored at cap {} for threshold {}", d.censored, metrics.cap, r.threshold);
        }
    }
    md.flush().map_err(data_err)?;
    Ok(0)
}

/// Null validation suite; exit code 1 when any check fails.
pub fn cmd_validate(cfg: &RunConfig) -> Result<i32, CliError> {
    let suite = NullSuite::new(cfg.n, cfg.p.unwrap_or(100), cfg.batches, cfg.seed).map_err(usage_err)?;
    let report = suite.run().map_err(usage_err)?;
    let json = serde_json::to_string_pretty(&report).map_err(data_err)? + "\n";
    emit(cfg.output.as_deref(), &json)?;
    Ok(if report.pass { 0 } else { 1 })
}

/// Writes `batches` batches of the configured scenario as CSV rows.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<i32, CliError> {
    let sim = Simulator::new(&scenario(cfg)?).map_err(data_err)?;
    let rows = sim.stream(cfg.seed, cfg.batches).map_err(data_err)?;
    let sink: Box<dyn Write> = match &cfg.output {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout())),
    };
    let mut w = csv::Writer::from_writer(sink);
    for row in rows {
        w.write_record(row.iter().map(f64::to_string)).map_err(data_err)?;
    }
    w.flush().map_err(data_err)?;
    Ok(0)
}
