//! Single-stream GLR CUSUM over an exponential-family parameter.
//!
//! Every observation is reduced to its sufficient statistic `s_i`, which is
//! exponential with rate `λ` (1 before the change). For a window `ℓ..m` of
//! length `L` with statistic sum `S` the log-likelihood ratio against the
//! null is `L ln λ − (λ−1) S`; its supremum over the admissible `λ` is
//! reached at the MLE `L/S` clamped into the admissible set.
//!
//! The GLR statistic maximizes that supremum over all window starts `ℓ`.
//! Written in terms of prefix points `(i, C_i)` with `C_i = s_1 + … + s_i`,
//! the window value is a supremum of linear functions of the start point
//! and hence convex in it, so the maximum over starts is attained at a
//! vertex of the convex hull of the prefix points. Prefix points arrive in
//! increasing `i`, so both hull chains are maintained by a monotone-chain
//! stack in amortized O(1) per observation; evaluation costs O(hull size).
//! With a finite lookback the hull is replaced by a plain scan of the last
//! `W` prefix points.
//!
//! Prefix sums are carried as an unevaluated pair `hi + lo` (compensated
//! summation). A window sum is a difference of two prefix sums and gets
//! multiplied by parameters up to the cap, so the plain difference would
//! lose the absolute accuracy of the early prefixes.

use std::collections::VecDeque;

use super::Sidedness;

/// Admissible parameter region `{λ ≥ 1+ε}` (one-sided) or
/// `{λ ≤ 1−ε} ∪ {λ ≥ 1+ε}` (two-sided), capped at `cap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissible {
    pub eps: f64,
    pub sidedness: Sidedness,
    pub cap: f64,
}

impl Admissible {
    /// Best log-likelihood ratio of a window of `len` observations with
    /// statistic sum `sum`, and the parameter attaining it.
    pub fn best(&self, len: f64, sum: f64) -> (f64, f64) {
        let mle = if sum > 0.0 { len / sum } else { f64::INFINITY };
        let up = mle.clamp(1.0 + self.eps, self.cap);
        let up_val = window_value(len, sum, up);
        if self.sidedness == Sidedness::TwoSided && self.eps < 1.0 {
            let down = mle.min(1.0 - self.eps);
            let down_val = window_value(len, sum, down);
            if down_val > up_val {
                return (down_val, down);
            }
        }
        (up_val, up)
    }
}

#[inline]
fn window_value(len: f64, sum: f64, param: f64) -> f64 {
    len * param.ln() - (param - 1.0) * sum
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Point {
    x: f64,
    y: f64,
    /// Low-order part of the prefix sum `y`.
    lo: f64,
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Prefix {
    hi: f64,
    lo: f64,
}

impl Prefix {
    fn add(&mut self, x: f64) {
        // two-sum: hi + x = s + err exactly
        let s = self.hi + x;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (x - bb);
        self.hi = s;
        self.lo += err;
    }

    /// `self − (hi, lo)`, accurate relative to the result.
    fn since(&self, hi: f64, lo: f64) -> f64 {
        (self.hi - hi) + (self.lo - lo)
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

#[derive(Debug, Clone, Default)]
struct PrefixHull {
    lower: Vec<Point>,
    upper: Vec<Point>,
}

impl PrefixHull {
    fn push(&mut self, pt: Point) {
        while self.lower.len() >= 2 && cross(self.lower[self.lower.len() - 2], self.lower[self.lower.len() - 1], pt) <= 0.0 {
            self.lower.pop();
        }
        self.lower.push(pt);
        while self.upper.len() >= 2 && cross(self.upper[self.upper.len() - 2], self.upper[self.upper.len() - 1], pt) >= 0.0 {
            self.upper.pop();
        }
        self.upper.push(pt);
    }

    fn vertices(&self) -> impl Iterator<Item = &Point> {
        self.lower.iter().chain(self.upper.iter())
    }

    fn len(&self) -> usize {
        self.lower.len() + self.upper.len()
    }
}

#[derive(Debug, Clone)]
enum Candidates {
    Unbounded(PrefixHull),
    Window { width: usize, prefixes: VecDeque<Prefix> },
}

/// Streaming GLR statistic for one sequence of sufficient statistics.
#[derive(Debug, Clone)]
pub struct GlrStream {
    admissible: Admissible,
    candidates: Candidates,
    steps: usize,
    cumulative: Prefix,
    value: f64,
    param: f64,
}

impl GlrStream {
    /// `window = None` maximizes over every start; `Some(w)` over the last `w`.
    pub fn new(admissible: Admissible, window: Option<usize>) -> Self {
        let candidates = match window {
            None => Candidates::Unbounded(PrefixHull::default()),
            Some(width) => Candidates::Window { width: width.max(1), prefixes: VecDeque::with_capacity(width.max(1)) },
        };
        Self { admissible, candidates, steps: 0, cumulative: Prefix::default(), value: f64::NEG_INFINITY, param: f64::NAN }
    }

    /// Absorbs the next sufficient statistic and returns the updated GLR value.
    pub fn push(&mut self, stat: f64) -> f64 {
        let prev = self.cumulative;
        let prev_x = self.steps as f64;
        self.steps += 1;
        self.cumulative.add(stat);
        let (m, c) = (self.steps as f64, self.cumulative);
        let adm = self.admissible;
        let mut best = (f64::NEG_INFINITY, f64::NAN);
        let mut consider = |x: f64, hi: f64, lo: f64| {
            let cand = adm.best(m - x, c.since(hi, lo).max(0.0));
            if cand.0 > best.0 {
                best = cand;
            }
        };
        match &mut self.candidates {
            Candidates::Unbounded(hull) => {
                hull.push(Point { x: prev_x, y: prev.hi, lo: prev.lo });
                hull.vertices().for_each(|p| consider(p.x, p.y, p.lo));
            }
            Candidates::Window { width, prefixes } => {
                if prefixes.len() == *width {
                    prefixes.pop_front();
                }
                prefixes.push_back(prev);
                let first = m - prefixes.len() as f64;
                prefixes.iter().enumerate().for_each(|(i, pre)| consider(first + i as f64, pre.hi, pre.lo));
            }
        }
        self.value = best.0;
        self.param = best.1;
        self.value
    }

    /// Current GLR value (`−∞` before the first observation).
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Parameter attaining the current value.
    pub fn param(&self) -> f64 {
        self.param
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of window starts currently evaluated per step.
    pub fn candidate_count(&self) -> usize {
        match &self.candidates {
            Candidates::Unbounded(h) => h.len(),
            Candidates::Window { prefixes, .. } => prefixes.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_sided(eps: f64) -> Admissible {
        Admissible { eps, sidedness: Sidedness::OneSided, cap: 1e6 }
    }

    fn naive(adm: Admissible, stats: &[f64], window: Option<usize>) -> f64 {
        let m = stats.len();
        let start = window.map_or(0, |w| m.saturating_sub(w));
        (start..m)
            .map(|l| {
                let s: f64 = stats[l..].iter().sum();
                adm.best((m - l) as f64, s).0
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn zero_statistic_hits_the_cap() {
        let mut g = GlrStream::new(one_sided(1.0), None);
        assert!((g.push(0.0) - 1e6f64.ln()).abs() < 1e-12);
        assert_eq!(g.param(), 1e6);
    }

    #[test]
    fn null_mean_observations_stay_at_floor() {
        let mut g = GlrStream::new(one_sided(1.0), None);
        for _ in 0..200 {
            let v = g.push(1.0);
            assert!((v - (2f64.ln() - 1.0)).abs() < 1e-12);
        }
        assert!(g.candidate_count() <= 4);
    }

    #[test]
    fn two_sided_picks_lower_branch_for_large_statistics() {
        let adm = Admissible { eps: 0.5, sidedness: Sidedness::TwoSided, cap: 1e6 };
        let (val, param) = adm.best(4.0, 40.0);
        assert!((param - 0.1).abs() < 1e-15);
        assert!((val - (4.0 * 0.1f64.ln() + 0.9 * 40.0)).abs() < 1e-12);
        // eps ≥ 1 leaves only the upper branch
        let adm = Admissible { eps: 1.0, sidedness: Sidedness::TwoSided, cap: 1e6 };
        assert_eq!(adm.best(4.0, 40.0).1, 2.0);
    }

    #[test]
    fn small_windows_after_large_prefix_stay_exact() {
        let adm = one_sided(1.0);
        let mut stats = vec![190.0; 40];
        stats.extend([3e-7, 1e-6, 2e-7, 5e-7]);
        for window in [None, Some(10)] {
            let mut g = GlrStream::new(adm, window);
            for m in 1..=stats.len() {
                let got = g.push(stats[m - 1]);
                let want = naive(adm, &stats[..m], window);
                assert!((got - want).abs() <= 1e-9, "m={m} {got} vs {want}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn hull_matches_full_scan(stats in prop::collection::vec(0.0f64..6.0, 1..80), eps in 0.05f64..2.0, two in any::<bool>()) {
            let adm = Admissible { eps, sidedness: if two { Sidedness::TwoSided } else { Sidedness::OneSided }, cap: 1e6 };
            let mut g = GlrStream::new(adm, None);
            for m in 1..=stats.len() {
                let got = g.push(stats[m - 1]);
                let want = naive(adm, &stats[..m], None);
                prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "m={} {} vs {}", m, got, want);
            }
        }

        #[test]
        fn window_matches_full_scan(stats in prop::collection::vec(0.0f64..6.0, 1..60), w in 1usize..12) {
            let adm = one_sided(1.0);
            let mut g = GlrStream::new(adm, Some(w));
            for m in 1..=stats.len() {
                let got = g.push(stats[m - 1]);
                let want = naive(adm, &stats[..m], Some(w));
                prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
        }
    }
}
