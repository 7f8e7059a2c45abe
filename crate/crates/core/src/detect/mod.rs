//! Streaming detection and hub isolation.
//!
//! [`HubDetector`] runs one GLR CUSUM per variable on the local statistics
//! and one on the global statistic:
//!
//! - `τ_V`: first batch where `max_k G_k > A_v`;
//! - `τ_U`: first batch where the global GLR exceeds `A_u`;
//! - `τ_HB = max(τ_V, τ_U)`.
//!
//! At `τ_HB` the `q` variables with the largest `G_k` are declared hubs.

mod glr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use glr::{Admissible, GlrStream};

use crate::error::{domain, Error, Result};
use crate::expfam::LimitFamily;
use crate::stats::SummarySample;

/// Upper cap on the estimated parameters, keeping the supremum finite when a
/// window's sufficient statistic is exactly zero.
pub const PARAM_CAP: f64 = 1e6;

/// Below this dimension local updates run sequentially.
const PARALLEL_UPDATE_MIN_P: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    /// Parameter at least `1 + ε`.
    OneSided,
    /// Parameter at least `1 + ε` or at most `1 − ε`.
    TwoSided,
}

impl std::str::FromStr for Sidedness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-sided" | "one" | "up" => Ok(Self::OneSided),
            "two-sided" | "two" => Ok(Self::TwoSided),
            other => domain(format!("unknown sidedness '{other}'")),
        }
    }
}

impl std::fmt::Display for Sidedness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::OneSided => "one-sided",
            Self::TwoSided => "two-sided",
        })
    }
}

/// Thresholds and tuning of the detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Global threshold `A_u` (may be `+∞`).
    pub a_u: f64,
    /// Local threshold `A_v` (may be `+∞`).
    pub a_v: f64,
    /// Smallest `|θ − 1|` to detect.
    pub eps_u: f64,
    /// Smallest `|J − 1|` to detect.
    pub eps_v: f64,
    /// Size of the declared hub set.
    pub q: usize,
    /// Lookback in batches; `None` searches every change time.
    pub window: Option<usize>,
    pub sidedness: Sidedness,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            a_u: 5.0,
            a_v: 5.0,
            eps_u: 1.0,
            eps_v: 1.0,
            q: 10,
            window: None,
            sidedness: Sidedness::OneSided,
        }
    }
}

impl DetectorConfig {
    /// Common threshold `A_u = A_v = a`.
    pub fn with_threshold(a: f64, q: usize) -> Self {
        Self { a_u: a, a_v: a, q, ..Self::default() }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        for (name, a) in [("a_u", self.a_u), ("a_v", self.a_v)] {
            if a.is_nan() || a <= 0.0 {
                return domain(format!("{name} must be positive, got {a}"));
            }
        }
        for (name, e) in [("eps_u", self.eps_u), ("eps_v", self.eps_v)] {
            if !(e > 0.0 && 1.0 + e < PARAM_CAP) {
                return domain(format!("{name} must be positive and below the parameter cap, got {e}"));
            }
        }
        if self.q < 2 {
            return domain(format!("q must be at least 2, got {}", self.q));
        }
        if self.q > p {
            return domain(format!("q = {} exceeds the dimension {p}", self.q));
        }
        if self.window == Some(0) {
            return domain("window must be positive");
        }
        Ok(())
    }

    fn local_admissible(&self) -> Admissible {
        Admissible { eps: self.eps_v, sidedness: self.sidedness, cap: PARAM_CAP }
    }

    fn global_admissible(&self) -> Admissible {
        Admissible { eps: self.eps_u, sidedness: self.sidedness, cap: PARAM_CAP }
    }
}

/// Snapshot of the detector after the last processed batch.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorState {
    /// Batches consumed.
    pub m: usize,
    /// Local GLR statistics `G_k(m)`.
    pub g: Vec<f64>,
    /// Global GLR statistic.
    pub g_global: f64,
    pub tau_v: Option<usize>,
    pub tau_u: Option<usize>,
    pub tau_hb: Option<usize>,
    /// `G_k(τ_HB)`, once `τ_HB` is set.
    pub g_at_stop: Option<Vec<f64>>,
}

impl DetectorState {
    pub fn max_local(&self) -> f64 {
        self.g.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Result of a completed detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub tau_v: usize,
    pub tau_u: usize,
    pub tau_hb: usize,
    /// Stopping indices in raw stream vectors (batch index × n).
    pub tau_v_samples: usize,
    pub tau_u_samples: usize,
    pub tau_hb_samples: usize,
    /// Declared hubs, 1-based, strongest first.
    pub selected: Vec<usize>,
    pub g_at_stop: Vec<f64>,
}

/// Streaming joint detector over summary samples.
#[derive(Debug, Clone)]
pub struct HubDetector {
    cfg: DetectorConfig,
    local: LimitFamily,
    global: LimitFamily,
    local_streams: Vec<GlrStream>,
    global_stream: GlrStream,
    state: DetectorState,
}

impl HubDetector {
    pub fn new(p: usize, n: usize, cfg: DetectorConfig) -> Result<Self> {
        cfg.validate(p)?;
        let local = LimitFamily::local(p, n)?;
        let global = LimitFamily::global(p, n)?;
        let stream = GlrStream::new(cfg.local_admissible(), cfg.window);
        Ok(Self {
            cfg,
            local,
            global,
            local_streams: vec![stream; p],
            global_stream: GlrStream::new(cfg.global_admissible(), cfg.window),
            state: DetectorState {
                m: 0,
                g: vec![f64::NEG_INFINITY; p],
                g_global: f64::NEG_INFINITY,
                tau_v: None,
                tau_u: None,
                tau_hb: None,
                g_at_stop: None,
            },
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn p(&self) -> usize {
        self.local.p()
    }

    pub fn n(&self) -> usize {
        self.local.n()
    }

    pub fn state(&self) -> &DetectorState {
        &self.state
    }

    pub fn local_family(&self) -> &LimitFamily {
        &self.local
    }

    pub fn global_family(&self) -> &LimitFamily {
        &self.global
    }

    /// Absorbs the next batch's statistics.
    ///
    /// Local statistics keep updating after `τ_V` so that `G_k(τ_HB)` is
    /// available; stopping indices, once set, never move.
    pub fn update(&mut self, sample: &SummarySample) -> Result<&DetectorState> {
        let expected = self.state.m + 1;
        if sample.batch_index != expected {
            return Err(Error::Sequencing { expected, got: sample.batch_index });
        }
        if sample.p() != self.p() {
            return domain(format!("sample has {} variables, detector expects {}", sample.p(), self.p()));
        }
        if let Some(bad) = sample.v.iter().chain(std::iter::once(&sample.u)).find(|x| !(0.0..=1.0).contains(*x)) {
            return domain(format!("statistic {bad} outside [0, 1]"));
        }

        let local = self.local;
        let step = |((stream, &v), g): ((&mut GlrStream, &f64), &mut f64)| {
            *g = stream.push(local.statistic_unchecked(v));
        };
        if self.p() >= PARALLEL_UPDATE_MIN_P {
            self.local_streams
                .par_iter_mut()
                .zip(sample.v.par_iter())
                .zip(self.state.g.par_iter_mut())
                .for_each(step);
        } else {
            self.local_streams.iter_mut().zip(sample.v.iter()).zip(self.state.g.iter_mut()).for_each(step);
        }
        self.state.g_global = self.global_stream.push(self.global.statistic_unchecked(sample.u));

        let s = &mut self.state;
        s.m = expected;
        if s.tau_v.is_none() && s.max_local() > self.cfg.a_v {
            s.tau_v = Some(s.m);
        }
        if s.tau_u.is_none() && s.g_global > self.cfg.a_u {
            s.tau_u = Some(s.m);
        }
        if s.tau_hb.is_none() && s.tau_v.is_some() && s.tau_u.is_some() {
            s.tau_hb = Some(s.m);
            s.g_at_stop = Some(s.g.clone());
        }
        Ok(&self.state)
    }

    pub fn stopped(&self) -> bool {
        self.state.tau_hb.is_some()
    }

    /// The detection report once `τ_HB` has been reached.
    pub fn report(&self) -> Option<DetectionReport> {
        let s = &self.state;
        let (tau_v, tau_u, tau_hb, g) = (s.tau_v?, s.tau_u?, s.tau_hb?, s.g_at_stop.as_ref()?);
        let n = self.n();
        let selected = isolate(g, self.cfg.q).ok()?.into_iter().map(|k| k + 1).collect();
        Some(DetectionReport {
            tau_v,
            tau_u,
            tau_hb,
            tau_v_samples: tau_v * n,
            tau_u_samples: tau_u * n,
            tau_hb_samples: tau_hb * n,
            selected,
            g_at_stop: g.clone(),
        })
    }
}

/// Indices (0-based) of the `q` largest values, largest first; ties go to
/// the smaller index.
pub fn isolate(g: &[f64], q: usize) -> Result<Vec<usize>> {
    if q > g.len() {
        return domain(format!("q = {q} exceeds the number of statistics {}", g.len()));
    }
    let mut idx: Vec<usize> = (0..g.len()).collect();
    idx.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
    idx.truncate(q);
    Ok(idx)
}

/// True when every true hub is among the selected indices. Both sides must
/// use the same indexing convention.
pub fn discovery_success(selected: &[usize], true_hubs: &[usize]) -> bool {
    true_hubs.iter().all(|h| selected.contains(h))
}
