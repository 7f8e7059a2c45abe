//! Special functions behind the limit densities.
//!
//! Everything here is built on the regularized incomplete beta function
//! `I_x(a, b)`, evaluated by a modified-Lentz continued fraction. The tail
//! weight `P_0(ρ) = I_{1−ρ²}((n−2)/2, 1/2)` is the probability that a single
//! null sample correlation from `n` observations exceeds `ρ` in magnitude.

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

const CF_MAX_ITER: usize = 500;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// Beta shape parameters induced by a batch of `n` observations:
/// `a = (n−2)/2`, `b = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeParams {
    n: usize,
    ln_beta: f64,
}

impl ShapeParams {
    /// Operating shape; the limit densities need `n > 4`.
    pub fn new(n: usize) -> Result<Self> {
        if n <= 4 {
            return domain(format!("batch size must exceed 4, got {n}"));
        }
        Ok(Self::build(n))
    }

    /// Diagnostic shape, accepting any `n > 2` (for example the closed form at `n = 4`).
    pub fn diagnostic(n: usize) -> Result<Self> {
        if n <= 2 {
            return domain(format!("batch size must exceed 2, got {n}"));
        }
        Ok(Self::build(n))
    }

    fn build(n: usize) -> Self {
        let a = (n as f64 - 2.0) / 2.0;
        Self { n, ln_beta: ln_beta_unchecked(a, 0.5) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }

    pub fn b(&self) -> f64 {
        0.5
    }

    /// Exponent `(n−4)/2` of the `(1−y²)` factor in the densities.
    pub fn poly_exponent(&self) -> f64 {
        (self.n as f64 - 4.0) / 2.0
    }

    /// `ln B((n−2)/2, 1/2)`.
    pub fn ln_beta(&self) -> f64 {
        self.ln_beta
    }
}

fn ln_beta_unchecked(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Natural log of the complete beta function `B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return domain(format!("ln_beta needs finite positive arguments, got ({a}, {b})"));
    }
    Ok(ln_beta_unchecked(a, b))
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("reg_inc_beta needs x in [0, 1], got {x}"));
    }
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return domain(format!("reg_inc_beta needs finite positive shapes, got ({a}, {b})"));
    }
    Ok(inc_beta_pair(x, 1.0 - x, a, b, ln_beta_unchecked(a, b)))
}

/// `I_x(a, b)` with the complement `y = 1 − x` supplied separately so callers
/// that know `y` exactly (as `ρ²`) avoid the cancellation in `1 − x`.
fn inc_beta_pair(x: f64, y: f64, a: f64, b: f64, ln_b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_b;
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * continued_fraction(x, a, b) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * continued_fraction(y, b, a) / b).clamp(0.0, 1.0)
    }
}

/// Continued fraction for `I_x(a, b)`, modified Lentz evaluation.
fn continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let guard = |v: f64| if v.abs() < CF_TINY { CF_TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return domain(format!("correlation magnitude must lie in [0, 1], got {rho}"));
    }
    Ok(())
}

/// `P_0(ρ) = I_{1−ρ²}((n−2)/2, 1/2)`: the null probability that one sample
/// correlation has magnitude at least `ρ`.
pub fn p0(rho: f64, shape: ShapeParams) -> Result<f64> {
    check_rho(rho)?;
    Ok(p0_unchecked(rho, shape))
}

pub(crate) fn p0_unchecked(rho: f64, shape: ShapeParams) -> f64 {
    // 1 − ρ² = (1 − ρ)(1 + ρ) keeps relative accuracy as ρ → 1.
    let x = (1.0 - rho) * (1.0 + rho);
    inc_beta_pair(x, rho * rho, shape.a(), shape.b(), shape.ln_beta())
}

/// `T(u) = ∫_u^1 (1−s²)^{(n−4)/2} ds`, computed as `½·B((n−2)/2, 1/2)·P_0(u)`.
pub fn t_integral(u: f64, shape: ShapeParams) -> Result<f64> {
    check_rho(u)?;
    Ok(0.5 * shape.ln_beta().exp() * p0_unchecked(u, shape))
}

/// Inverse of [`p0`]: the `ρ ∈ [0, 1]` with `P_0(ρ) = target`, by bisection
/// to `1e-12` in `ρ`.
pub fn p0_inverse(target: f64, shape: ShapeParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&target) {
        return domain(format!("P_0 target must lie in [0, 1], got {target}"));
    }
    if target >= 1.0 {
        return Ok(0.0);
    }
    if target <= 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        // P_0 is decreasing in ρ
        if p0_unchecked(mid, shape) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
