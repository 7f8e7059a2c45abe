//! Population hubs and calibrated family parameters of a covariance.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cov::correlation_of;
use super::source::GaussianSource;
use crate::error::{domain, Result};
use crate::expfam::LimitFamily;
use crate::specialfn::{p0, t_integral};
use crate::stats::SummarySample;

/// Tolerance used when grouping tied maxima.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Batches used to estimate the parameters unless told otherwise.
pub const DEFAULT_CALIB_BATCHES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Variables attaining the largest population `V_k`, 1-based and sorted.
    /// Empty for a diagonal covariance.
    pub hubs: Vec<usize>,
    /// Estimated local parameter per variable.
    pub j: Vec<f64>,
    /// Estimated global parameter.
    pub theta: f64,
}

impl GroundTruth {
    /// Largest estimated local parameter.
    pub fn j_max(&self) -> f64 {
        self.j.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Population `V_k = max_{i≠k} |ρ_ki|`.
pub fn population_local_stats(sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let r = correlation_of(sigma)?;
    let p = r.nrows();
    Ok((0..p).map(|k| (0..p).filter(|&i| i != k).map(|i| r[(k, i)].abs()).fold(0.0, f64::max)).collect())
}

/// 1-based variables whose population `V_k` ties the maximum.
pub fn population_hubs(sigma: &DMatrix<f64>) -> Result<Vec<usize>> {
    let v = population_local_stats(sigma)?;
    let top = v.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return Ok(Vec::new());
    }
    Ok(v.iter().enumerate().filter(|(_, &x)| x >= top - TIE_TOLERANCE).map(|(k, _)| k + 1).collect())
}

pub fn ground_truth(sigma: &DMatrix<f64>, n: usize, calib_batches: usize, seed: u64) -> Result<GroundTruth> {
    if calib_batches == 0 {
        return domain("ground truth needs at least one calibration batch");
    }
    let hubs = population_hubs(sigma)?;
    let p = sigma.nrows();
    let local = LimitFamily::local(p, n)?;
    let global = LimitFamily::global(p, n)?;
    let shape = local.shape();
    let source = GaussianSource::new(sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kernels = vec![Vec::with_capacity(calib_batches); p];
    let mut global_kernels = Vec::with_capacity(calib_batches);
    for b in 1..=calib_batches {
        let s = SummarySample::from_batch(&source.batch(&mut rng, n, b, None)?)?;
        for (k, &v) in kernels.iter_mut().zip(&s.v) {
            k.push(p0(v, shape)?);
        }
        global_kernels.push(t_integral(s.u, shape)?);
    }
    let j = kernels.iter().map(|k| local.mle(k)).collect::<Result<Vec<_>>>()?;
    let theta = global.mle(&global_kernels)?;
    Ok(GroundTruth { hubs, j, theta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_no_hubs_and_unit_parameters() {
        let gt = ground_truth(&DMatrix::identity(100, 100), 10, 1000, 5).unwrap();
        assert!(gt.hubs.is_empty());
        for (k, j) in gt.j.iter().enumerate() {
            assert!((0.8..=1.25).contains(j), "J_{} = {j}", k + 1);
        }
        assert!((0.8..=1.25).contains(&gt.theta), "theta = {}", gt.theta);
    }

    #[test]
    fn unique_strongest_edge_defines_the_hubs() {
        let mut sigma = DMatrix::identity(100, 100);
        sigma[(18, 85)] = 0.9;
        sigma[(85, 18)] = 0.9;
        sigma[(3, 4)] = 0.5;
        sigma[(4, 3)] = 0.5;
        assert_eq!(population_hubs(&sigma).unwrap(), vec![19, 86]);
    }

    #[test]
    fn ties_are_grouped() {
        let mut sigma = DMatrix::identity(6, 6);
        for (a, b) in [(0, 1), (3, 5)] {
            sigma[(a, b)] = 0.4;
            sigma[(b, a)] = 0.4;
        }
        assert_eq!(population_hubs(&sigma).unwrap(), vec![1, 2, 4, 6]);
    }

    #[test]
    fn strong_pair_dominates_estimates() {
        let mut sigma = DMatrix::identity(100, 100);
        sigma[(11, 92)] = 0.9;
        sigma[(92, 11)] = 0.9;
        let gt = ground_truth(&sigma, 10, 1000, 8).unwrap();
        assert_eq!(gt.hubs, vec![12, 93]);
        let rest = gt.j.iter().enumerate().filter(|(k, _)| *k != 11 && *k != 92).map(|(_, j)| *j).fold(0.0, f64::max);
        assert!(gt.j[11] > 3.0 * rest && gt.j[92] > 3.0 * rest, "{} {} {rest}", gt.j[11], gt.j[92]);
        assert!(gt.theta > 1.0, "theta = {}", gt.theta);
    }
}
