//! Null-law validation suite: empirical `V_1` against its limit CDF, degree
//! counts against the Poisson law, and normalization of both densities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::source::GaussianSource;
use crate::error::{domain, Result};
use crate::expfam::LimitFamily;
use crate::gof::{chi_square_poisson, ks_distance, ks_p_value};
use crate::quad::integrate_pieces;
use crate::specialfn::p0_inverse;
use crate::stats::ColumnScores;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullSuite {
    pub n: usize,
    pub p: usize,
    pub batches: usize,
    pub seed: u64,
    /// Mean degree `(p−1)·P_0(ρ)` that fixes the degree threshold `ρ`.
    pub degree_mean: f64,
    pub ks_tolerance: f64,
    /// Interval expected to hold at least `min_fraction` of the `V_1` draws.
    pub interval: (f64, f64),
    pub min_fraction: f64,
    pub chi_square_level: f64,
    pub norm_tolerance: f64,
}

impl NullSuite {
    /// Defaults for the given shape. At `n = 10, p = 100` the concentration
    /// interval is `(0.55, 0.95)`; otherwise it is the central 99% interval
    /// of the limit law, which is looser than the 95% fraction demanded.
    pub fn new(n: usize, p: usize, batches: usize, seed: u64) -> Result<Self> {
        let interval = if (n, p) == (10, 100) {
            (0.55, 0.95)
        } else {
            let fam = LimitFamily::local(p, n)?;
            (limit_quantile(&fam, 0.005)?, limit_quantile(&fam, 0.995)?)
        };
        Ok(Self {
            n,
            p,
            batches,
            seed,
            degree_mean: 1.0,
            ks_tolerance: 0.05,
            interval,
            min_fraction: 0.95,
            chi_square_level: 0.01,
            norm_tolerance: 1e-6,
        })
    }

    pub fn run(&self) -> Result<NullReport> {
        if self.batches < 2 {
            return domain("the validation suite needs at least two batches");
        }
        let local = LimitFamily::local(self.p, self.n)?;
        let global = LimitFamily::global(self.p, self.n)?;
        let shape = local.shape();
        let rho = p0_inverse(self.degree_mean / (self.p - 1) as f64, shape)?;

        let source = GaussianSource::identity(self.p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut v1 = Vec::with_capacity(self.batches);
        let mut degrees = Vec::with_capacity(self.batches);
        for b in 1..=self.batches {
            let scores = ColumnScores::from_batch(&source.batch(&mut rng, self.n, b, None)?)?;
            let r: Vec<f64> = (1..self.p).map(|i| scores.correlation(0, i).abs()).collect();
            v1.push(r.iter().copied().fold(0.0, f64::max));
            degrees.push(r.iter().filter(|&&x| x > rho).count());
        }

        let ks = ks_distance(&v1, |y| local.cdf(y.clamp(0.0, 1.0), 1.0).unwrap_or(f64::NAN))?;
        let (lo, hi) = self.interval;
        let fraction = v1.iter().filter(|&&y| y > lo && y < hi).count() as f64 / v1.len() as f64;

        let count = degrees.len() as f64;
        let mean = degrees.iter().sum::<usize>() as f64 / count;
        let var = degrees.iter().map(|&d| (d as f64 - mean).powi(2)).sum::<f64>() / (count - 1.0);
        let degree_std_err = (var / count).sqrt();
        let fit = chi_square_poisson(&degrees, self.degree_mean, 5.0)?;

        let local_residual = (density_mass(&local)? - 1.0).abs();
        let global_residual = (density_mass(&global)? - 1.0).abs();

        let ks_pass = ks <= self.ks_tolerance;
        let concentration_pass = fraction >= self.min_fraction;
        let degree_mean_pass = (mean - self.degree_mean).abs() <= 3.0 * degree_std_err;
        let chi_square_pass = fit.p_value > self.chi_square_level;
        let normalization_pass = local_residual <= self.norm_tolerance && global_residual <= self.norm_tolerance;
        Ok(NullReport {
            suite: *self,
            rho,
            ks_distance: ks,
            ks_p_value: ks_p_value(ks, v1.len()),
            ks_pass,
            concentration_fraction: fraction,
            concentration_pass,
            degree_mean: mean,
            degree_std_err,
            degree_mean_pass,
            chi_square: fit.statistic,
            chi_square_dof: fit.dof,
            chi_square_p_value: fit.p_value,
            chi_square_pass,
            local_norm_residual: local_residual,
            global_norm_residual: global_residual,
            normalization_pass,
            pass: ks_pass && concentration_pass && degree_mean_pass && chi_square_pass && normalization_pass,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullReport {
    pub suite: NullSuite,
    /// Degree threshold.
    pub rho: f64,
    pub ks_distance: f64,
    pub ks_p_value: f64,
    pub ks_pass: bool,
    pub concentration_fraction: f64,
    pub concentration_pass: bool,
    pub degree_mean: f64,
    pub degree_std_err: f64,
    pub degree_mean_pass: bool,
    pub chi_square: f64,
    pub chi_square_dof: usize,
    pub chi_square_p_value: f64,
    pub chi_square_pass: bool,
    pub local_norm_residual: f64,
    pub global_norm_residual: f64,
    pub normalization_pass: bool,
    pub pass: bool,
}

/// `y` with limit CDF `exp(−s(y)) = prob` at parameter 1.
fn limit_quantile(fam: &LimitFamily, prob: f64) -> Result<f64> {
    let target = -prob.ln() / fam.statistic(0.0)?;
    if target >= 1.0 {
        return Ok(0.0);
    }
    p0_inverse(target, fam.shape())
}

/// Mass of the parameter-1 density plus its atom at 0. Breakpoints sit at
/// quantiles of the exponential statistic, where the mass actually lives.
pub fn density_mass(fam: &LimitFamily) -> Result<f64> {
    let edge = fam.statistic(0.0)?;
    let mut breaks = vec![0.0];
    for z in [40.0, 20.0, 12.0, 8.0, 5.0, 3.0, 2.0, 1.0, 0.5, 0.2, 0.05, 1e-2, 1e-3, 1e-5] {
        if z < edge {
            breaks.push(p0_inverse(z / edge, fam.shape())?);
        }
    }
    breaks.push(1.0);
    breaks.dedup();
    let body = integrate_pieces(|y| if y <= 0.0 || y >= 1.0 { 0.0 } else { fam.logpdf(y, 1.0).map_or(0.0, f64::exp) }, &breaks, 1e-13);
    Ok(body + (-edge).exp())
}
