//! Gaussian vector source `x = L z`, with `L` the Cholesky factor of the
//! covariance stored row-sparse (the generated covariances factor with few
//! fill-ins).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::stats::DataMatrix;

#[derive(Debug, Clone)]
pub struct GaussianSource {
    p: usize,
    /// Nonzeros of each row of the lower factor, `(column, value)`.
    rows: Vec<Vec<(usize, f64)>>,
}

impl GaussianSource {
    pub fn new(sigma: &DMatrix<f64>) -> Result<Self> {
        let p = sigma.nrows();
        if p == 0 || sigma.ncols() != p {
            return domain("covariance must be a nonempty square matrix");
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return domain("covariance has non-finite entries");
        }
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Construction("covariance is not positive definite".into()))?;
        let l = chol.l();
        let rows = (0..p).map(|r| (0..=r).filter(|&c| l[(r, c)] != 0.0).map(|c| (c, l[(r, c)])).collect()).collect();
        Ok(Self { p, rows })
    }

    /// Independent coordinates with the given standard deviations.
    pub fn diagonal(sd: &[f64]) -> Result<Self> {
        if sd.is_empty() {
            return domain("dimension must be positive");
        }
        if let Some(bad) = sd.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return domain(format!("standard deviation {bad} must be positive and finite"));
        }
        Ok(Self { p: sd.len(), rows: sd.iter().enumerate().map(|(i, &s)| vec![(i, s)]).collect() })
    }

    pub fn identity(p: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; p])
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Writes one draw into `out`, using `z` as scratch for the innovations.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], out: &mut [f64]) {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for (x, row) in out.iter_mut().zip(&self.rows) {
            *x = row.iter().map(|&(c, v)| v * z[c]).sum();
        }
    }

    /// An `n×p` batch, every row shifted by `mean` when given.
    pub fn batch<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, batch_index: usize, mean: Option<&[f64]>) -> Result<DataMatrix> {
        let p = self.p;
        let mut values = vec![0.0; n * p];
        let mut z = vec![0.0; p];
        for row in values.chunks_exact_mut(p) {
            self.fill(rng, &mut z, row);
            if let Some(mu) = mean {
                row.iter_mut().zip(mu).for_each(|(x, m)| *x += m);
            }
        }
        DataMatrix::from_rows(n, p, values, batch_index)
    }
}
