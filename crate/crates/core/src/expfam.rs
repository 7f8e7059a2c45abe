//! One-parameter exponential-family limit laws of the summary statistics.
//!
//! For large `p` with `n` fixed, a local statistic `V_k` has density
//!
//! ```text
//! f_V(y; J) = J · C(p,n) · (1−y²)^{(n−4)/2} · exp(−(p−1) · J · P_0(y)),   C(p,n) = 2(p−1) / B((n−2)/2, 1/2)
//! ```
//!
//! and the global statistic `U` has
//!
//! ```text
//! g(u; θ) = (D θ / 2) · (1−u²)^{(n−4)/2} · exp(−(D/2) · θ · T(u)),         D = 2p(p−1) / B((n−2)/2, 1/2)
//! ```
//!
//! Both have the shape `λ κ (1−y²)^e exp(−λ s(y))` with sufficient statistic
//! `s(y) = scale · kernel(y)`: `(p−1)·P_0(y)` locally and `(D/2)·T(u)`
//! globally. Under parameter `λ` the statistic `s(Y)` is exponential with
//! rate `λ`, which gives the closed-form MLE, KL divergence and an exact
//! inverse-CDF sampler.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{domain, Result};
use crate::specialfn::{p0_inverse, p0_unchecked, ShapeParams};

/// Which summary statistic a family describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// Per-variable `V_k`, parameter `J`.
    Local,
    /// Batch-wide `U`, parameter `θ`.
    Global,
}

/// A limit-density family for fixed `(p, n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitFamily {
    kind: FamilyKind,
    p: usize,
    shape: ShapeParams,
    /// `p−1` (local) or `D/2` (global): multiplies the kernel in the exponent.
    scale: f64,
    /// Expected number of null edges: `p−1` (local) or `p(p−1)/2` (global).
    edge_rate: f64,
    /// `ln C(p,n)` or `ln(D/2)`.
    ln_norm: f64,
}

pub type LocalFamily = LimitFamily;
pub type GlobalFamily = LimitFamily;

fn check_dims(p: usize, n: usize) -> Result<ShapeParams> {
    if p < 2 {
        return domain(format!("dimension must be at least 2, got {p}"));
    }
    ShapeParams::new(n)
}

impl LimitFamily {
    /// Family of `f_V(·; J)`.
    pub fn local(p: usize, n: usize) -> Result<Self> {
        let shape = check_dims(p, n)?;
        let pm1 = (p - 1) as f64;
        Ok(Self {
            kind: FamilyKind::Local,
            p,
            shape,
            scale: pm1,
            edge_rate: pm1,
            ln_norm: (2.0 * pm1).ln() - shape.ln_beta(),
        })
    }

    /// Family of `g(·; θ)`.
    pub fn global(p: usize, n: usize) -> Result<Self> {
        let shape = check_dims(p, n)?;
        let pairs = (p * (p - 1)) as f64;
        let half_d = pairs / shape.ln_beta().exp();
        Ok(Self {
            kind: FamilyKind::Global,
            p,
            shape,
            scale: half_d,
            edge_rate: pairs / 2.0,
            ln_norm: half_d.ln(),
        })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.shape.n()
    }

    pub fn shape(&self) -> ShapeParams {
        self.shape
    }

    /// `C(p, n)` for the local family, `D/2` for the global one.
    pub fn norm_constant(&self) -> f64 {
        self.ln_norm.exp()
    }

    /// `D = 2p(p−1)/B((n−2)/2, 1/2)`.
    pub fn d_constant(&self) -> f64 {
        (self.p * (self.p - 1)) as f64 * 2.0 / self.shape.ln_beta().exp()
    }

    /// Multiplier of the kernel in the exponent (`p−1` or `D/2`).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `P_0(y)` (local) or `T(u)` (global).
    pub fn kernel(&self, y: f64) -> Result<f64> {
        check_unit(y)?;
        Ok(self.kernel_unchecked(y))
    }

    fn kernel_unchecked(&self, y: f64) -> f64 {
        match self.kind {
            FamilyKind::Local => p0_unchecked(y, self.shape),
            FamilyKind::Global => 0.5 * self.shape.ln_beta().exp() * p0_unchecked(y, self.shape),
        }
    }

    /// Sufficient statistic `scale · kernel(y)`; exponential with rate equal
    /// to the family parameter.
    pub fn statistic(&self, y: f64) -> Result<f64> {
        check_unit(y)?;
        Ok(self.statistic_unchecked(y))
    }

    pub(crate) fn statistic_unchecked(&self, y: f64) -> f64 {
        match self.kind {
            FamilyKind::Local => self.scale * p0_unchecked(y, self.shape),
            // (D/2)·T(u) = (D/2)·(B/2)·P_0(u) = p(p−1)/2 · P_0(u)
            FamilyKind::Global => self.scale * self.kernel_unchecked(y),
        }
    }

    /// Log-density at `y ∈ (0, 1]`. `−∞` at `y = 1`, where the density vanishes.
    pub fn logpdf(&self, y: f64, param: f64) -> Result<f64> {
        check_param(param)?;
        if !(y > 0.0 && y <= 1.0) {
            return domain(format!("density support is (0, 1], got {y}"));
        }
        let one_minus_sq = (1.0 - y) * (1.0 + y);
        Ok(param.ln() + self.ln_norm + self.shape.poly_exponent() * one_minus_sq.ln()
            - param * self.statistic_unchecked(y))
    }

    /// `ln f(y; λ) − ln f(y; 1) = ln λ − (λ−1)·s(y)`, finite on all of `[0, 1]`.
    pub fn loglr(&self, y: f64, param: f64) -> Result<f64> {
        check_param(param)?;
        check_unit(y)?;
        Ok(loglr_from_statistic(self.statistic_unchecked(y), param))
    }

    /// Maximum-likelihood estimate from kernel values (`P_0(V_i)` locally,
    /// `T(U_i)` globally): `1 / (scale · mean)`, `+∞` when the mean is 0.
    pub fn mle(&self, kernel_values: &[f64]) -> Result<f64> {
        if kernel_values.is_empty() {
            return domain("MLE of an empty window");
        }
        if let Some(bad) = kernel_values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return domain(format!("kernel value {bad} is not a finite nonnegative number"));
        }
        let mean = kernel_values.iter().sum::<f64>() / kernel_values.len() as f64;
        Ok(1.0 / (self.scale * mean))
    }

    /// Log-likelihood of a window relative to the null, `Σ ln f(y_i; λ)/f(y_i; 1)`.
    pub fn window_loglr(&self, ys: &[f64], param: f64) -> Result<f64> {
        ys.iter().map(|&y| self.loglr(y, param)).sum()
    }

    /// Null CDF approximation `exp(−λ · s(ρ))` of the statistic.
    pub fn cdf(&self, rho: f64, param: f64) -> Result<f64> {
        check_param(param)?;
        check_unit(rho)?;
        Ok((-param * self.statistic_unchecked(rho)).exp())
    }

    /// Exact draw from the family: `Z ~ Exp(λ)`, then `y` solves `s(y) = Z`
    /// by bisection. `Z` beyond `s(0)` maps to the atom at 0.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, param: f64) -> Result<f64> {
        check_param(param)?;
        let z = Exp::new(param).map_err(|e| crate::Error::Domain(e.to_string()))?.sample(rng);
        let target = z / self.edge_rate;
        if target >= 1.0 {
            return Ok(0.0);
        }
        p0_inverse(target, self.shape)
    }
}

#[inline]
pub(crate) fn loglr_from_statistic(stat: f64, param: f64) -> f64 {
    param.ln() - (param - 1.0) * stat
}

fn check_param(param: f64) -> Result<()> {
    if !(param > 0.0 && param.is_finite()) {
        return domain(format!("family parameter must be positive and finite, got {param}"));
    }
    Ok(())
}

fn check_unit(y: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&y) {
        return domain(format!("statistic must lie in [0, 1], got {y}"));
    }
    Ok(())
}

/// KL divergence between the members with parameters `x` and 1:
/// `ln x − 1 + 1/x`. Identical for both families.
pub fn kl_divergence(x: f64) -> Result<f64> {
    check_param(x)?;
    Ok(x.ln() - 1.0 + 1.0 / x)
}

/// `I(J)` between `f_V(·; J)` and `f_V(·; 1)`.
pub fn kl_local(j: f64) -> Result<f64> {
    kl_divergence(j)
}

/// `I(θ)` between `g(·; θ)` and `g(·; 1)`.
pub fn kl_global(theta: f64) -> Result<f64> {
    kl_divergence(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_pieces;
    use crate::specialfn::p0;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const BREAKS: [f64; 12] = [0.0, 0.3, 0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.99, 1.0];

    fn local() -> LimitFamily {
        LimitFamily::local(100, 10).unwrap()
    }

    fn global() -> LimitFamily {
        LimitFamily::global(100, 10).unwrap()
    }

    fn density_mass(fam: &LimitFamily, param: f64, upper: f64) -> f64 {
        let breaks: Vec<f64> = BREAKS.iter().map(|b| b.min(upper)).collect();
        integrate_pieces(
            |y| if y <= 0.0 { 0.0 } else { fam.logpdf(y, param).unwrap().exp() },
            &breaks,
            1e-12,
        )
    }

    #[test]
    fn constructors_validate() {
        assert!(LimitFamily::local(1, 10).is_err());
        assert!(LimitFamily::local(10, 4).is_err());
        assert!(LimitFamily::global(10, 3).is_err());
    }

    #[test]
    fn logpdf_boundary_and_domain() {
        let fam = LimitFamily::local(100, 5).unwrap();
        assert_eq!(fam.logpdf(1.0, 1.0).unwrap(), f64::NEG_INFINITY);
        assert!(fam.logpdf(0.0, 1.0).is_err());
        assert!(fam.logpdf(-0.2, 1.0).is_err());
        assert!(fam.logpdf(0.5, 0.0).is_err());
        assert!(global().logpdf(0.0, 1.0).is_err());
    }

    #[test]
    fn densities_integrate_to_one() {
        assert!((density_mass(&local(), 1.0, 1.0) - 1.0).abs() < 1e-6);
        assert!((density_mass(&global(), 1.0, 1.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn local_mode_is_in_reported_interval() {
        let fam = local();
        let (mut best_y, mut best) = (0.0, f64::NEG_INFINITY);
        for i in 1..10_000 {
            let y = i as f64 / 10_000.0;
            let v = fam.logpdf(y, 1.0).unwrap();
            if v > best {
                best = v;
                best_y = y;
            }
        }
        assert!(best_y > 0.55 && best_y < 0.95, "mode at {best_y}");
    }

    #[test]
    fn cdf_from_density_matches_closed_form() {
        let fam = local();
        for &j in &[1.0, 3.0] {
            let atom = (-99.0_f64 * j).exp();
            for &rho in &[0.5, 0.7, 0.8, 0.9] {
                let want = fam.cdf(rho, j).unwrap();
                let got = atom + density_mass(&fam, j, rho);
                assert!((got - want).abs() < 1e-6, "J={j} rho={rho}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn loglr_examples() {
        let fam = LimitFamily::local(101, 10).unwrap();
        assert_eq!(fam.loglr(0.4, 1.0).unwrap(), 0.0);
        assert!((fam.loglr(1.0, 2.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((fam.loglr(0.0, 2.0).unwrap() - (2f64.ln() - 100.0)).abs() < 1e-12);
        let g = global();
        assert_eq!(g.loglr(0.9, 1.0).unwrap(), 0.0);
        assert!((g.loglr(1.0, 7.0).unwrap() - 7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn global_statistic_is_edge_count_rate() {
        // (D/2)·T(u) equals p(p−1)/2 · P_0(u)
        let g = global();
        for &u in &[0.0, 0.3, 0.8, 0.97] {
            let want = 4950.0 * p0(u, g.shape()).unwrap();
            let got = g.statistic(u).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.max(1.0));
        }
        assert!((g.d_constant() / 2.0 - g.scale()).abs() < 1e-9 * g.scale());
    }

    #[test]
    fn mle_examples() {
        let fam = local();
        assert!((fam.mle(&[1.0 / 99.0; 4]).unwrap() - 1.0).abs() < 1e-14);
        assert!((fam.mle(&[0.5 / 99.0]).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(fam.mle(&[0.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(fam.mle(&[]).is_err());
        let g = global();
        let d = g.d_constant();
        assert!((g.mle(&[2.0 / d]).unwrap() - 1.0).abs() < 1e-12);
        assert!((g.mle(&[1.0 / d, 1.0 / d]).unwrap() - 2.0).abs() < 1e-12);
        assert!(g.mle(&[]).is_err());
    }

    #[test]
    fn mle_recovers_parameter_from_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let fam = local();
        let ys: Vec<f64> = (0..1000).map(|_| fam.sample(&mut rng, 3.0).unwrap()).collect();
        let ks: Vec<f64> = ys.iter().map(|&y| fam.kernel(y).unwrap()).collect();
        let j = fam.mle(&ks).unwrap();
        assert!((j - 3.0).abs() < 0.3, "J-hat {j}");

        let g = global();
        let us: Vec<f64> = (0..1000).map(|_| g.sample(&mut rng, 5.0).unwrap()).collect();
        let ts: Vec<f64> = us.iter().map(|&u| g.kernel(u).unwrap()).collect();
        let theta = g.mle(&ts).unwrap();
        assert!((theta - 5.0).abs() < 0.5, "theta-hat {theta}");
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_local(1.0).unwrap(), 0.0);
        assert!((kl_local(2.0).unwrap() - (2f64.ln() - 0.5)).abs() < 1e-15);
        assert!((kl_global(17.0).unwrap() - (17f64.ln() - 16.0 / 17.0)).abs() < 1e-15);
        assert!(kl_local(0.0).is_err());
        assert!(kl_global(-1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn loglr_is_difference_of_logpdfs(y in 0.01f64..0.999, j in 0.05f64..30.0) {
            for fam in [local(), global()] {
                let a = fam.logpdf(y, j).unwrap() - fam.logpdf(y, 1.0).unwrap();
                let b = fam.loglr(y, j).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{} vs {}", a, b);
            }
        }

        #[test]
        fn mle_maximizes_window_likelihood(seed in any::<u64>(), j in 0.3f64..8.0, len in 1usize..40) {
            let fam = local();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ys: Vec<f64> = (0..len).map(|_| fam.sample(&mut rng, j).unwrap()).collect();
            let ks: Vec<f64> = ys.iter().map(|&y| fam.kernel(y).unwrap()).collect();
            let hat = fam.mle(&ks).unwrap();
            prop_assume!(hat.is_finite());
            let at = fam.window_loglr(&ys, hat).unwrap();
            prop_assert!(at >= fam.window_loglr(&ys, hat * 1.01).unwrap());
            prop_assert!(at >= fam.window_loglr(&ys, hat * 0.99).unwrap());
        }
    }
}
