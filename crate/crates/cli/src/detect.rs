//! Streaming detection over CSV input.

use std::io::Read;

use corrhub::detect::{isolate, HubDetector, Sidedness};
use corrhub::stats::{Batcher, SummarySample};
use corrhub::Error;
use serde::{Deserialize, Serialize};

use crate::{data_err, CliError, RunConfig};

/// A named CSV input.
pub struct Source {
    name: String,
    reader: Box<dyn Read>,
}

impl Source {
    pub fn new(name: impl Into<String>, reader: Box<dyn Read>) -> Self {
        Self { name: name.into(), reader }
    }
}

/// Detector settings echoed in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub n: usize,
    pub p: Option<usize>,
    pub a_u: f64,
    pub a_v: f64,
    pub eps_u: f64,
    pub eps_v: f64,
    pub q: usize,
    pub window: Option<usize>,
    pub sidedness: Sidedness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectReport {
    /// `alarm` or `no_alarm`.
    pub status: String,
    /// Complete batches processed.
    pub batches: usize,
    /// Stream vectors read, including a trailing partial batch.
    pub vectors: usize,
    pub tau_v: Option<usize>,
    pub tau_u: Option<usize>,
    pub tau_hb: Option<usize>,
    pub tau_v_samples: Option<usize>,
    pub tau_u_samples: Option<usize>,
    pub tau_hb_samples: Option<usize>,
    /// Declared hubs at the alarm, 1-based, strongest first.
    pub selected: Vec<usize>,
    pub g_at_stop: Option<Vec<f64>>,
    pub config: ConfigEcho,
}

/// Reads the sources in order as one stream and runs the detector until the
/// joint alarm or the end of input.
pub fn run_detect(cfg: &RunConfig, sources: Vec<Source>) -> Result<DetectReport, CliError> {
    let mut p = cfg.p;
    let mut batcher = Batcher::new(cfg.n).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut detector: Option<HubDetector> = None;
    let mut vectors = 0;

    'sources: for src in sources {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(src.reader);
        let mut first = true;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| data_err(format!("{}: {e}", src.name)))?;
            let line = rec.position().map_or(0, |pos| pos.line());
            let parsed: Result<Vec<f64>, usize> =
                rec.iter().enumerate().map(|(i, f)| f.parse::<f64>().map_err(|_| i)).collect();
            let row = match parsed {
                Ok(row) => row,
                // a non-numeric first line is a header
                Err(_) if first => {
                    first = false;
                    continue;
                }
                Err(i) => {
                    return Err(data_err(format!("{}:{line}: field {} ('{}') is not a number", src.name, i + 1, &rec[i])))
                }
            };
            first = false;
            if let Some(bad) = row.iter().position(|x| !x.is_finite()) {
                return Err(data_err(format!("{}:{line}: field {} is not finite", src.name, bad + 1)));
            }
            let dim = *p.get_or_insert(row.len());
            if row.len() != dim {
                return Err(data_err(format!("{}:{line}: expected {dim} fields, found {}", src.name, row.len())));
            }
            if detector.is_none() {
                let det = HubDetector::new(dim, cfg.n, cfg.detector()).map_err(|e| CliError::Usage(e.to_string()))?;
                detector = Some(det);
            }
            vectors += 1;
            let batch = batcher.push(&row).map_err(|e| data_err(format!("{}:{line}: {e}", src.name)))?;
            if let (Some(batch), Some(det)) = (batch, detector.as_mut()) {
                let b = batch.batch_index();
                let sample = SummarySample::from_batch(&batch).map_err(|e| match e {
                    Error::DegenerateColumn { column } => {
                        data_err(format!("batch {b} (ending {}:{line}): column {} has zero sample variance", src.name, column + 1))
                    }
                    other => data_err(other),
                })?;
                det.update(&sample).map_err(data_err)?;
                if det.stopped() {
                    break 'sources;
                }
            }
        }
    }

    let st = detector.as_ref().map(|d| d.state().clone());
    let (tau_v, tau_u, tau_hb) = st.as_ref().map_or((None, None, None), |s| (s.tau_v, s.tau_u, s.tau_hb));
    let g_at_stop = st.as_ref().and_then(|s| s.g_at_stop.clone());
    let selected = match &g_at_stop {
        Some(g) => isolate(g, cfg.q).map_err(data_err)?.into_iter().map(|k| k + 1).collect(),
        None => Vec::new(),
    };
    let n = cfg.n;
    Ok(DetectReport {
        status: if tau_hb.is_some() { "alarm" } else { "no_alarm" }.into(),
        batches: st.as_ref().map_or(0, |s| s.m),
        vectors,
        tau_v,
        tau_u,
        tau_hb,
        tau_v_samples: tau_v.map(|t| t * n),
        tau_u_samples: tau_u.map(|t| t * n),
        tau_hb_samples: tau_hb.map(|t| t * n),
        selected,
        g_at_stop,
        config: ConfigEcho {
            n,
            p,
            a_u: cfg.a_u,
            a_v: cfg.a_v,
            eps_u: cfg.eps_u,
            eps_v: cfg.eps_v,
            q: cfg.q,
            window: cfg.window,
            sidedness: cfg.sidedness,
        },
    })
}
