//! Goodness-of-fit statistics used by the validation suite.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{domain, Result};

/// One-sample Kolmogorov–Smirnov distance between `samples` and `cdf`.
///
/// `cdf` may have atoms; the distance is evaluated on both sides of each
/// sample jump.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return domain("KS distance of an empty sample");
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // ties share one jump
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max((j as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        i = j;
    }
    Ok(d)
}

/// Asymptotic p-value of a KS distance `d` from `n` samples
/// (Kolmogorov series with Stephens' small-sample correction).
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareFit {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Observed and expected counts per merged bin.
    pub bins: Vec<(f64, f64)>,
}

/// Chi-square fit of nonnegative integer `counts` against Poisson(`rate`).
///
/// Bins are `0, 1, 2, …` with the upper tail pooled; adjacent bins are merged
/// until each expects at least `min_expected` observations.
pub fn chi_square_poisson(counts: &[usize], rate: f64, min_expected: f64) -> Result<ChiSquareFit> {
    if counts.is_empty() {
        return domain("chi-square fit of an empty sample");
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return domain(format!("Poisson rate must be positive, got {rate}"));
    }
    let total = counts.len() as f64;
    let max = *counts.iter().max().unwrap_or(&0);
    let mut observed = vec![0.0; max + 2];
    for &c in counts {
        observed[c] += 1.0;
    }
    // pmf for 0..=max, the last slot takes the tail beyond max
    let mut expected = Vec::with_capacity(max + 2);
    let mut pmf = (-rate).exp();
    let mut cum = 0.0;
    for k in 0..=max {
        if k > 0 {
            pmf *= rate / k as f64;
        }
        expected.push(pmf * total);
        cum += pmf;
    }
    expected.push((1.0 - cum).max(0.0) * total);

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, e) in observed.into_iter().zip(expected) {
        o_acc += o;
        e_acc += e;
        if e_acc >= min_expected {
            bins.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => bins.push((o_acc, e_acc)),
        }
    }
    if bins.len() < 2 {
        return domain("too few bins for a chi-square fit");
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| crate::Error::Domain(e.to_string()))?;
    Ok(ChiSquareFit { statistic, dof, p_value: 1.0 - dist.cdf(statistic), bins })
}
