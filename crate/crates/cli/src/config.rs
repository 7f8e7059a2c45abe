//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown and repeated keys are
//! rejected. Optional values are written only when set, except `gamma`,
//! whose `inf` means "no change point" and `window`, where `none` means an
//! unbounded lookback.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use corrhub::detect::{DetectorConfig, Sidedness};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    /// Dimension; inferred from the data by `detect` when absent.
    pub p: Option<usize>,
    pub a_u: f64,
    pub a_v: f64,
    pub eps_u: f64,
    pub eps_v: f64,
    pub q: usize,
    pub window: Option<usize>,
    pub sidedness: Sidedness,
    /// Change batch of simulated streams; `None` never changes.
    pub gamma: Option<usize>,
    /// Post-change paths (false isolation).
    pub paths: usize,
    pub seed: u64,
    pub input: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub thresholds: Vec<f64>,
    /// Reference scenario 1, 2 or 3.
    pub scenario: Option<usize>,
    /// Row-sparsity degree of generated covariances.
    pub j: usize,
    pub diag_boost: f64,
    pub partner_sum: Option<usize>,
    pub delay_paths: usize,
    pub mfa_paths: usize,
    pub cap: usize,
    pub calib_batches: usize,
    /// Batches of the null validation suite and of `simulate`.
    pub batches: usize,
    pub mean_shift: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let det = DetectorConfig::default();
        Self {
            n: 10,
            p: None,
            a_u: det.a_u,
            a_v: det.a_v,
            eps_u: det.eps_u,
            eps_v: det.eps_v,
            q: det.q,
            window: det.window,
            sidedness: det.sidedness,
            gamma: Some(1),
            paths: 1000,
            seed: 1,
            input: Vec::new(),
            output: None,
            thresholds: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 15.0],
            scenario: None,
            j: 5,
            diag_boost: 0.0,
            partner_sum: None,
            delay_paths: 500,
            mfa_paths: 1500,
            cap: corrhub::sim::DEFAULT_CAP,
            calib_batches: corrhub::sim::DEFAULT_CALIB_BATCHES,
            batches: 10_000,
            mean_shift: 0.0,
        }
    }
}

/// Keys accepted in a config file.
pub const KEYS: [&str; 25] = [
    "n", "p", "a_u", "a_v", "eps_u", "eps_v", "q", "window", "sidedness", "gamma", "paths", "seed", "input",
    "output", "thresholds", "scenario", "j", "diag_boost", "partner_sum", "delay_paths", "mfa_paths", "cap",
    "calib_batches", "batches", "mean_shift",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| format!("invalid value '{value}' for {key}: {e}"))
}

fn optional<T: FromStr>(key: &str, value: &str, none: &str) -> Result<Option<T>, String>
where
    T::Err: fmt::Display,
{
    if value.eq_ignore_ascii_case(none) {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl RunConfig {
    /// Assigns one key. The flag-only `threshold` sets `a_u` and `a_v` together.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "n" => self.n = parse(key, v)?,
            "p" => self.p = optional(key, v, "auto")?,
            "a_u" => self.a_u = parse(key, v)?,
            "a_v" => self.a_v = parse(key, v)?,
            "threshold" => {
                self.a_u = parse(key, v)?;
                self.a_v = self.a_u;
            }
            "eps_u" => self.eps_u = parse(key, v)?,
            "eps_v" => self.eps_v = parse(key, v)?,
            "q" => self.q = parse(key, v)?,
            "window" => self.window = optional(key, v, "none")?,
            "sidedness" => self.sidedness = v.parse().map_err(|e| format!("{e}"))?,
            "gamma" => self.gamma = optional(key, v, "inf")?,
            "paths" => self.paths = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "input" => self.input = list(v).map(PathBuf::from).collect(),
            "output" => self.output = (!v.is_empty()).then(|| PathBuf::from(v)),
            "thresholds" => self.thresholds = list(v).map(|t| parse(key, t)).collect::<Result<_, _>>()?,
            "scenario" => self.scenario = optional(key, v, "none")?,
            "j" => self.j = parse(key, v)?,
            "diag_boost" => self.diag_boost = parse(key, v)?,
            "partner_sum" => self.partner_sum = optional(key, v, "auto")?,
            "delay_paths" => self.delay_paths = parse(key, v)?,
            "mfa_paths" => self.mfa_paths = parse(key, v)?,
            "cap" => self.cap = parse(key, v)?,
            "calib_batches" => self.calib_batches = parse(key, v)?,
            "batches" => self.batches = parse(key, v)?,
            "mean_shift" => self.mean_shift = parse(key, v)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let usage = |msg: String| CliError::Usage(format!("config line {}: {msg}", i + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| usage("expected 'key = value'".into()))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(usage(format!("unknown key '{key}'")));
            }
            if seen.contains(&key) {
                return Err(usage(format!("key '{key}' given twice")));
            }
            seen.push(key);
            cfg.set(key, value).map_err(usage)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// Every key that differs from "unset", one per line.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("n", self.n.to_string());
        if let Some(p) = self.p {
            put("p", p.to_string());
        }
        put("a_u", self.a_u.to_string());
        put("a_v", self.a_v.to_string());
        put("eps_u", self.eps_u.to_string());
        put("eps_v", self.eps_v.to_string());
        put("q", self.q.to_string());
        put("window", self.window.map_or("none".into(), |w| w.to_string()));
        put("sidedness", self.sidedness.to_string());
        put("gamma", self.gamma.map_or("inf".into(), |g| g.to_string()));
        put("paths", self.paths.to_string());
        put("seed", self.seed.to_string());
        if !self.input.is_empty() {
            put("input", self.input.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "));
        }
        if let Some(o) = &self.output {
            put("output", o.display().to_string());
        }
        put("thresholds", self.thresholds.iter().map(f64::to_string).collect::<Vec<_>>().join(", "));
        if let Some(id) = self.scenario {
            put("scenario", id.to_string());
        }
        put("j", self.j.to_string());
        put("diag_boost", self.diag_boost.to_string());
        if let Some(ps) = self.partner_sum {
            put("partner_sum", ps.to_string());
        }
        put("delay_paths", self.delay_paths.to_string());
        put("mfa_paths", self.mfa_paths.to_string());
        put("cap", self.cap.to_string());
        put("calib_batches", self.calib_batches.to_string());
        put("batches", self.batches.to_string());
        put("mean_shift", self.mean_shift.to_string());
        s
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            a_u: self.a_u,
            a_v: self.a_v,
            eps_u: self.eps_u,
            eps_v: self.eps_v,
            q: self.q,
            window: self.window,
            sidedness: self.sidedness,
        }
    }

    /// Detector invariants, checked against `p` when it is known.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: corrhub::Error| CliError::Usage(e.to_string());
        self.detector().validate(self.p.unwrap_or(self.q.max(2))).map_err(usage)?;
        if self.n < 5 {
            return Err(CliError::Usage(format!("n must be at least 5, got {}", self.n)));
        }
        if self.gamma == Some(0) {
            return Err(CliError::Usage("gamma must be at least 1".into()));
        }
        if let Some(id) = self.scenario {
            if !(1..=3).contains(&id) {
                return Err(CliError::Usage(format!("scenario must be 1, 2 or 3, got {id}")));
            }
        }
        if self.thresholds.is_empty() {
            return Err(CliError::Usage("thresholds must not be empty".into()));
        }
        if self.thresholds.iter().any(|t| !(*t > 0.0 && t.is_finite())) || self.thresholds.windows(2).any(|w| w[1] < w[0]) {
            return Err(CliError::Usage("thresholds must be positive, finite and ascending".into()));
        }
        if self.cap == 0 {
            return Err(CliError::Usage("cap must be positive".into()));
        }
        if !(self.mean_shift >= 0.0 && self.mean_shift.is_finite()) || !(self.diag_boost >= 0.0 && self.diag_boost.is_finite()) {
            return Err(CliError::Usage("mean_shift and diag_boost must be finite and nonnegative".into()));
        }
        Ok(())
    }
}
