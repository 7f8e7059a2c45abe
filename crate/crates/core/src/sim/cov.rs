//! Row-sparse post-change covariance matrices.
//!
//! A `p×p` Wishart draw `A·Aᵀ` (identity scale, `p` degrees of freedom) is
//! sparsified to keep only
//!
//! - the top-left `j×j` block, and
//! - for each row `k ∈ j+1 ..= ⌊(p+j)/2⌋` (1-based), the diagonal entry and
//!   the entry pairing `k` with `partner_sum − k` (plus its mirror).
//!
//! Everything else is zeroed, then `c·I` is added with
//! `c = |λ_min| + 0.05·trace/p` whenever `λ_min ≤ 0`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Error, Result};

/// Parameters of [`gen_rowsparse_cov`].
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpec {
    pub p: usize,
    /// Row-sparsity degree.
    pub j: usize,
    pub seed: u64,
    /// Extra multiple of the identity added before the positivity repair.
    pub diag_boost: f64,
    /// Row `k` (1-based) pairs with `partner_sum − k`. Defaults to `p + j + 1`.
    pub partner_sum: usize,
}

impl CovarianceSpec {
    pub fn new(p: usize, j: usize, seed: u64) -> Self {
        Self { p, j, seed, diag_boost: 0.0, partner_sum: p + j + 1 }
    }

    /// 1-based pairs `(k, partner)` retained outside the leading block.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let last = (self.p + self.j) / 2;
        (self.j + 1..=last)
            .filter_map(|k| {
                let partner = self.partner_sum.checked_sub(k)?;
                (partner != k && partner >= 1 && partner <= self.p).then_some((k, partner))
            })
            .collect()
    }
}

/// A generated covariance with construction diagnostics.
#[derive(Debug, Clone)]
pub struct GeneratedCovariance {
    pub sigma: DMatrix<f64>,
    /// Total multiple of the identity added (user boost plus repair).
    pub boost: f64,
    pub warnings: Vec<String>,
}

/// Minimum eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn gen_rowsparse_cov(spec: &CovarianceSpec) -> Result<GeneratedCovariance> {
    let (p, j) = (spec.p, spec.j);
    if p < 2 {
        return domain(format!("dimension must be at least 2, got {p}"));
    }
    if j < 1 || j >= p {
        return domain(format!("sparsity degree must satisfy 1 <= j < p, got j = {j}, p = {p}"));
    }
    if !(spec.diag_boost >= 0.0 && spec.diag_boost.is_finite()) {
        return domain(format!("diag_boost must be finite and nonnegative, got {}", spec.diag_boost));
    }
    let mut warnings = Vec::new();
    if (p + j) % 2 == 1 {
        warnings.push(format!("p + j = {} is odd; paired rows run to {}", p + j, (p + j) / 2));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let a = DMatrix::<f64>::from_fn(p, p, |_, _| StandardNormal.sample(&mut rng));
    let wishart = &a * a.transpose();

    let mut sigma = DMatrix::<f64>::zeros(p, p);
    for r in 0..j {
        for c in 0..j {
            sigma[(r, c)] = wishart[(r, c)];
        }
    }
    for (k, partner) in spec.pairs() {
        let (k0, q0) = (k - 1, partner - 1);
        sigma[(k0, k0)] = wishart[(k0, k0)];
        sigma[(k0, q0)] = wishart[(k0, q0)];
        sigma[(q0, k0)] = wishart[(q0, k0)];
    }

    let mut boost = spec.diag_boost;
    for i in 0..p {
        sigma[(i, i)] += spec.diag_boost;
    }
    let lambda_min = min_eigenvalue(&sigma);
    if lambda_min <= 0.0 {
        let c = lambda_min.abs() + 0.05 * sigma.trace() / p as f64;
        for i in 0..p {
            sigma[(i, i)] += c;
        }
        boost += c;
    }
    if sigma.clone().cholesky().is_none() {
        return Err(Error::Construction("covariance is not positive definite after the diagonal boost".into()));
    }
    Ok(GeneratedCovariance { sigma, boost, warnings })
}

/// Population correlation matrix of a covariance.
pub fn correlation_of(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = sigma.nrows();
    if sigma.ncols() != p {
        return domain("covariance must be square");
    }
    let sd: Vec<f64> = (0..p).map(|i| sigma[(i, i)].sqrt()).collect();
    if let Some(i) = sd.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
        return domain(format!("variance of variable {} is not positive", i + 1));
    }
    Ok(DMatrix::from_fn(p, p, |r, c| if r == c { 1.0 } else { sigma[(r, c)] / (sd[r] * sd[c]) }))
}
