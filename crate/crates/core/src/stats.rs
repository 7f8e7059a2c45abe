//! Batching of the vector stream and sample-correlation summary statistics.
//!
//! Each batch of `n` consecutive `p`-vectors becomes an `n×p` [`DataMatrix`].
//! From it we compute the local statistics `V_k` (largest absolute sample
//! correlation between variable `k` and any other) and the global statistic
//! `U = max_k V_k`.
//!
//! For the detector only `V` is needed, so [`ColumnScores`] forms the
//! centered, unit-norm columns once and scans column pairs without
//! materializing the `p×p` matrix. [`CorrelationMatrix`] is the full-matrix
//! path kept for diagnostics (degrees, tests).

use rayon::prelude::*;

use crate::error::{domain, Error, Result};

/// Above this dimension the pair scan is split across rayon workers.
const PARALLEL_SCAN_MIN_P: usize = 1024;

/// One `n×p` batch of the stream, rows are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    /// Row-major `n×p`.
    values: Vec<f64>,
    batch_index: usize,
}

impl DataMatrix {
    /// Builds a batch from row-major values. `batch_index` is 1-based.
    pub fn from_rows(n: usize, p: usize, values: Vec<f64>, batch_index: usize) -> Result<Self> {
        if n < 2 {
            return domain(format!("batch needs at least 2 rows, got {n}"));
        }
        if values.len() != n * p {
            return domain(format!("expected {} values for a {n}x{p} batch, got {}", n * p, values.len()));
        }
        if batch_index == 0 {
            return domain("batch index is 1-based");
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format {
                index: (batch_index - 1) * n + pos / p + 1,
                message: format!("non-finite value in column {}", pos % p + 1),
            });
        }
        Ok(Self { n, p, values, batch_index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn batch_index(&self) -> usize {
        self.batch_index
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.p + k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Groups a stream of `p`-vectors into consecutive batches of `n`.
///
/// A trailing partial batch is held back until it fills.
#[derive(Debug, Clone)]
pub struct Batcher {
    n: usize,
    p: Option<usize>,
    pending: Vec<f64>,
    seen: usize,
    emitted: usize,
}

impl Batcher {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return domain(format!("batch size must be at least 2, got {n}"));
        }
        Ok(Self { n, p: None, pending: Vec::new(), seen: 0, emitted: 0 })
    }

    /// Like [`Batcher::new`] but with the dimension fixed up front.
    pub fn with_dimension(n: usize, p: usize) -> Result<Self> {
        let mut b = Self::new(n)?;
        b.p = Some(p);
        Ok(b)
    }

    /// Feeds one stream vector; returns a batch when it completes one.
    pub fn push(&mut self, vector: &[f64]) -> Result<Option<DataMatrix>> {
        self.seen += 1;
        let p = *self.p.get_or_insert(vector.len());
        if vector.len() != p {
            return Err(Error::Format {
                index: self.seen,
                message: format!("expected {p} values, got {}", vector.len()),
            });
        }
        self.pending.extend_from_slice(vector);
        if self.pending.len() < self.n * p {
            return Ok(None);
        }
        self.emitted += 1;
        let values = std::mem::take(&mut self.pending);
        DataMatrix::from_rows(self.n, p, values, self.emitted).map(Some)
    }

    /// Vectors waiting for their batch to fill.
    pub fn pending(&self) -> usize {
        match self.p {
            Some(p) if p > 0 => self.pending.len() / p,
            _ => 0,
        }
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn dimension(&self) -> Option<usize> {
        self.p
    }
}

/// Batches a whole in-memory stream. Returns the complete batches and the
/// number of vectors left pending.
pub fn batch<V: AsRef<[f64]>>(stream: &[V], n: usize) -> Result<(Vec<DataMatrix>, usize)> {
    let mut batcher = Batcher::new(n)?;
    let mut out = Vec::new();
    for v in stream {
        if let Some(m) = batcher.push(v.as_ref())? {
            out.push(m);
        }
    }
    Ok((out, batcher.pending()))
}

/// Centered, unit-norm columns of a batch (column-major, `p` columns of
/// length `n`). The dot product of two columns is their sample correlation.
#[derive(Debug, Clone)]
pub struct ColumnScores {
    n: usize,
    p: usize,
    scores: Vec<f64>,
}

impl ColumnScores {
    pub fn from_batch(x: &DataMatrix) -> Result<Self> {
        let (n, p) = (x.n, x.p);
        let mut scores = vec![0.0; n * p];
        for k in 0..p {
            let col = &mut scores[k * n..(k + 1) * n];
            for (i, c) in col.iter_mut().enumerate() {
                *c = x.get(i, k);
            }
            let mean = col.iter().sum::<f64>() / n as f64;
            let raw_ss: f64 = col.iter().map(|v| v * v).sum();
            col.iter_mut().for_each(|v| *v -= mean);
            let ss: f64 = col.iter().map(|v| v * v).sum();
            // residual spread at rounding level counts as constant
            if ss <= 1e-24 * raw_ss || ss == 0.0 {
                return Err(Error::DegenerateColumn { column: k });
            }
            let inv = 1.0 / ss.sqrt();
            col.iter_mut().for_each(|v| *v *= inv);
        }
        Ok(Self { n, p, scores })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    fn column(&self, k: usize) -> &[f64] {
        &self.scores[k * self.n..(k + 1) * self.n]
    }

    /// Sample correlation of columns `i` and `j`, clamped to `[-1, 1]`.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        dot(self.column(i), self.column(j)).clamp(-1.0, 1.0)
    }

    /// `V_k = max_{i≠k} |r_ki|` for every `k`, by a pass over column pairs.
    pub fn local_stats(&self) -> Result<Vec<f64>> {
        let p = self.p;
        if p < 2 {
            return domain(format!("local statistics need p >= 2, got {p}"));
        }
        if p >= PARALLEL_SCAN_MIN_P {
            return Ok((0..p).into_par_iter().map(|k| self.row_max(k)).collect());
        }
        let mut v = vec![0.0_f64; p];
        for i in 0..p {
            let ci = self.column(i);
            let (head, tail) = v.split_at_mut(i + 1);
            let mut best = head[i];
            for (j, vj) in (i + 1..p).zip(tail.iter_mut()) {
                let r = dot(ci, self.column(j)).abs().min(1.0);
                best = best.max(r);
                *vj = vj.max(r);
            }
            head[i] = best;
        }
        Ok(v)
    }

    fn row_max(&self, k: usize) -> f64 {
        let ck = self.column(k);
        (0..self.p)
            .filter(|&i| i != k)
            .map(|i| dot(ck, self.column(i)).abs().min(1.0))
            .fold(0.0, f64::max)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Full `p×p` sample correlation matrix (symmetric, unit diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    p: usize,
    r: Vec<f64>,
}

impl CorrelationMatrix {
    /// Wraps a symmetric matrix given row-major; entries are clamped into
    /// `[-1, 1]` and the diagonal set to 1.
    pub fn from_values(p: usize, mut r: Vec<f64>) -> Result<Self> {
        if r.len() != p * p {
            return domain(format!("expected {} entries, got {}", p * p, r.len()));
        }
        for i in 0..p {
            for j in 0..p {
                let idx = i * p + j;
                if !r[idx].is_finite() {
                    return domain(format!("non-finite correlation at ({i}, {j})"));
                }
                r[idx] = if i == j { 1.0 } else { r[idx].clamp(-1.0, 1.0) };
            }
        }
        Ok(Self { p, r })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.p + j]
    }

    fn off_diagonal_row(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        let row = &self.r[k * self.p..(k + 1) * self.p];
        row.iter().enumerate().filter(move |(i, _)| *i != k).map(|(_, v)| v.abs())
    }
}

/// Pearson sample correlation of the columns, after removing the batch mean row.
pub fn sample_correlation(x: &DataMatrix) -> Result<CorrelationMatrix> {
    let scores = ColumnScores::from_batch(x)?;
    let p = scores.p;
    let mut r = vec![0.0; p * p];
    for i in 0..p {
        r[i * p + i] = 1.0;
        for j in i + 1..p {
            let c = scores.correlation(i, j);
            r[i * p + j] = c;
            r[j * p + i] = c;
        }
    }
    Ok(CorrelationMatrix { p, r })
}

/// `v[k] = max_{i≠k} |r_ki|`.
pub fn local_stats(r: &CorrelationMatrix) -> Result<Vec<f64>> {
    if r.p < 2 {
        return domain(format!("local statistics need p >= 2, got {}", r.p));
    }
    Ok((0..r.p).map(|k| r.off_diagonal_row(k).fold(0.0, f64::max)).collect())
}

/// `U = max_k v[k]`.
pub fn global_stat(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return domain("global statistic of an empty vector");
    }
    Ok(v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// `d[k] = #{i ≠ k : |r_ki| ≥ rho}`, the vertex degrees of the thresholded
/// sample correlation graph.
pub fn sample_degree(r: &CorrelationMatrix, rho: f64) -> Result<Vec<usize>> {
    if r.p < 2 {
        return domain(format!("degrees need p >= 2, got {}", r.p));
    }
    if rho.is_nan() {
        return domain("threshold is NaN");
    }
    Ok((0..r.p).map(|k| r.off_diagonal_row(k).filter(|&a| a >= rho).count()).collect())
}

/// Local and global statistics of one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SummarySample {
    pub v: Vec<f64>,
    pub u: f64,
    pub batch_index: usize,
}

impl SummarySample {
    pub fn new(v: Vec<f64>, batch_index: usize) -> Result<Self> {
        if let Some(bad) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return domain(format!("local statistic {bad} outside [0, 1]"));
        }
        let u = global_stat(&v)?;
        Ok(Self { v, u, batch_index })
    }

    /// Statistics of a batch via the pair scan.
    pub fn from_batch(x: &DataMatrix) -> Result<Self> {
        let v = ColumnScores::from_batch(x)?.local_stats()?;
        Self::new(v, x.batch_index)
    }

    pub fn p(&self) -> usize {
        self.v.len()
    }
}
