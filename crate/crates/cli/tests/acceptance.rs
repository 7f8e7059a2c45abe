//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::time::{Duration, Instant};

use corrhub::detect::{isolate, DetectorConfig, HubDetector, Sidedness, PARAM_CAP};
use corrhub::expfam::{kl_global, kl_local, LimitFamily};
use corrhub::gof::{ks_distance, ks_p_value};
use corrhub::quad::integrate_pieces;
use corrhub::sim::validate::NullSuite;
use corrhub::sim::{
    ground_truth, monte_carlo, run_paths, McPlan, Scenario, Simulator, PRESET_SEEDS, PRESET_TARGETS,
};
use corrhub::specialfn::{ln_beta, p0, p0_inverse, t_integral, ShapeParams};
use corrhub::stats::SummarySample;
use corrhub_cli::RunConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// `∫_0^φ sin^k` by the reduction formula.
fn sin_power_integral(k: u32, phi: f64) -> f64 {
    match k {
        0 => phi,
        1 => 1.0 - phi.cos(),
        _ => {
            let kf = k as f64;
            -phi.sin().powi(k as i32 - 1) * phi.cos() / kf + (kf - 1.0) / kf * sin_power_integral(k - 2, phi)
        }
    }
}

/// `T(u) = ∫_u^1 (1−r²)^{(n−4)/2} dr = ∫_0^{acos u} sin^{n−3}`.
fn t_oracle(u: f64, n: u32) -> f64 {
    sin_power_integral(n - 3, u.acos())
}

fn null_suite() -> Result<(corrhub::sim::validate::NullReport, Duration), corrhub::Error> {
    let start = Instant::now();
    let report = NullSuite::new(10, 100, 10_000, 20_240_601)?.run()?;
    Ok((report, start.elapsed()))
}

fn criterion_1(report: &corrhub::sim::validate::NullReport, elapsed: Duration) -> Outcome {
    let pass = report.ks_distance <= 0.05 && report.concentration_fraction >= 0.95 && elapsed.as_secs() <= 120;
    outcome(
        pass,
        format!(
            "KS = {:.4} (<= 0.05), fraction in (0.55, 0.95) = {:.4} (>= 0.95), {:.1}s (<= 120s)",
            report.ks_distance,
            report.concentration_fraction,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2(report: &corrhub::sim::validate::NullReport) -> Outcome {
    outcome(
        report.chi_square_p_value > 0.01,
        format!(
            "chi2 = {:.3} on {} dof, p = {:.4} (> 0.01); mean degree {:.4} +- {:.4} vs 1 at rho = {:.4}",
            report.chi_square, report.chi_square_dof, report.chi_square_p_value, report.degree_mean, report.degree_std_err, report.rho
        ),
    )
}

fn criterion_3() -> Result<Outcome, corrhub::Error> {
    let mut worst: f64 = 0.0;
    for n in [5u32, 6, 10, 20] {
        let shape = ShapeParams::new(n as usize)?;
        let b = ln_beta((n as f64 - 2.0) / 2.0, 0.5)?.exp();
        for i in 0..1000 {
            let u = i as f64 / 999.0;
            let t = t_oracle(u, n);
            worst = worst.max((2.0 * t - b * p0(u, shape)?).abs() / b);
            worst = worst.max((t_integral(u, shape)? - t).abs() / b);
        }
    }
    let mut closed: f64 = 0.0;
    let four = ShapeParams::diagnostic(4)?;
    let six = ShapeParams::new(6)?;
    for i in 0..1000 {
        let x = i as f64 / 999.0;
        closed = closed.max((p0(x, four)? - (1.0 - x)).abs());
        closed = closed.max((t_integral(x, six)? - (2.0 / 3.0 - x + x.powi(3) / 3.0)).abs());
    }
    Ok(outcome(
        worst <= 1e-12 && closed <= 1e-12,
        format!("max |2T - B*P0|/B = {worst:.2e}, closed-form error {closed:.2e} (<= 1e-12)"),
    ))
}

/// KL between members `x` and 1 by quadrature, with breakpoints at
/// quantiles of the exponential sufficient statistic under `x`.
fn kl_quadrature(fam: &LimitFamily, x: f64) -> Result<f64, corrhub::Error> {
    let edge = fam.statistic(0.0)?;
    let mut breaks = vec![0.0];
    for z in [60.0, 40.0, 25.0, 15.0, 10.0, 6.0, 4.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.03, 1e-2, 1e-3, 1e-4, 1e-6] {
        if z / x < edge {
            breaks.push(p0_inverse(z / x / edge, fam.shape())?);
        }
    }
    breaks.push(1.0);
    breaks.dedup();
    let body = integrate_pieces(
        |y| {
            if y <= 0.0 || y >= 1.0 {
                return 0.0;
            }
            let (lx, l1) = (fam.logpdf(y, x).unwrap(), fam.logpdf(y, 1.0).unwrap());
            lx.exp() * (lx - l1)
        },
        &breaks,
        1e-14,
    );
    let atom = (-x * edge).exp();
    Ok(body + atom * (x.ln() - (x - 1.0) * edge))
}

fn criterion_4() -> Result<Outcome, corrhub::Error> {
    let local = LimitFamily::local(100, 10)?;
    let global = LimitFamily::global(100, 10)?;
    let shape = local.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut min_p: f64 = 1.0;
    for j in [1.0, 2.56, 5.88, 17.0] {
        let z: Vec<f64> = (0..5000)
            .map(|_| local.sample(&mut rng, j).map(|v| 99.0 * p0(v, shape).unwrap()))
            .collect::<Result<_, _>>()?;
        let d = ks_distance(&z, |t| 1.0 - (-j * t.max(0.0)).exp())?;
        min_p = min_p.min(ks_p_value(d, z.len()));
    }
    let mut kl_err: f64 = 0.0;
    for x in [2.0, 5.88, 17.0] {
        kl_err = kl_err.max((kl_quadrature(&local, x)? - kl_local(x)?).abs());
        kl_err = kl_err.max((kl_quadrature(&global, x)? - kl_global(x)?).abs());
    }
    Ok(outcome(
        min_p > 0.01 && kl_err <= 1e-8,
        format!("min KS p-value of Z ~ Exp(J) = {min_p:.4} (> 0.01), max KL quadrature error {kl_err:.2e} (<= 1e-8)"),
    ))
}

/// Naive GLR: every start, clamped-MLE supremum, from the family's own
/// window log-likelihood.
fn naive_glr(fam: &LimitFamily, ys: &[f64], eps: f64, sidedness: Sidedness, window: Option<usize>) -> f64 {
    let m = ys.len();
    let first = window.map_or(0, |w| m.saturating_sub(w));
    let mut best = f64::NEG_INFINITY;
    for l in first..m {
        let kernels: Vec<f64> = ys[l..].iter().map(|&y| fam.kernel(y).unwrap()).collect();
        let mle = fam.mle(&kernels).unwrap();
        let mut cands = vec![mle.clamp(1.0 + eps, PARAM_CAP)];
        if sidedness == Sidedness::TwoSided && eps < 1.0 {
            cands.push(mle.min(1.0 - eps));
        }
        for lam in cands {
            best = best.max(fam.window_loglr(&ys[l..], lam).unwrap());
        }
    }
    best
}

fn criterion_5() -> Result<Outcome, corrhub::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = rng.random_range(2..=20);
        let n = rng.random_range(5..=12);
        let batches = rng.random_range(1..=50);
        let cfg = DetectorConfig {
            a_u: f64::INFINITY,
            a_v: f64::INFINITY,
            eps_u: rng.random_range(0.05..2.0),
            eps_v: rng.random_range(0.05..2.0),
            q: 2,
            window: if rng.random_bool(0.5) { None } else { Some(rng.random_range(1..=20)) },
            sidedness: if rng.random_bool(0.5) { Sidedness::OneSided } else { Sidedness::TwoSided },
        };
        let mut det = HubDetector::new(p, n, cfg)?;
        let local = LimitFamily::local(p, n)?;
        let global = LimitFamily::global(p, n)?;
        let mut history: Vec<SummarySample> = Vec::new();
        // stretches of weak and strong correlation, with exact 0 and 1 now and then
        let strong_from = rng.random_range(0..=batches);
        for b in 1..=batches {
            let v: Vec<f64> = (0..p)
                .map(|_| match rng.random_range(0..40) {
                    0 => 0.0,
                    1 => 1.0,
                    _ if b > strong_from => rng.random_range(0.6..1.0),
                    _ => rng.random::<f64>(),
                })
                .collect();
            let s = SummarySample::new(v, b)?;
            det.update(&s)?;
            history.push(s);
            let st = det.state();
            for k in 0..p {
                let ys: Vec<f64> = history.iter().map(|h| h.v[k]).collect();
                worst = worst.max((st.g[k] - naive_glr(&local, &ys, cfg.eps_v, cfg.sidedness, cfg.window)).abs());
            }
            let us: Vec<f64> = history.iter().map(|h| h.u).collect();
            worst = worst.max((st.g_global - naive_glr(&global, &us, cfg.eps_u, cfg.sidedness, cfg.window)).abs());
        }
    }
    Ok(outcome(worst <= 1e-9, format!("max |streaming - naive| over 100 streams = {worst:.2e} (<= 1e-9)")))
}

const CURVE_THRESHOLDS: [f64; 10] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 15.0];

fn criterion_6() -> Result<Outcome, corrhub::Error> {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for id in 1..=3 {
        let sc = Scenario::preset(id)?;
        let sim = Simulator::new(&sc)?;
        let gt = ground_truth(sim.sigma(), sc.n, 1000, PRESET_SEEDS[id - 1])?;
        let ((a, b), (ja, jb)) = PRESET_TARGETS[id - 1];
        let hubs_ok = gt.hubs == vec![a, b];
        let (ga, gb) = (gt.j[a - 1], gt.j[b - 1]);
        let j_ok = (ga / ja - 1.0).abs() <= 0.1 && (gb / jb - 1.0).abs() <= 0.1;

        let m = monte_carlo(&sim, &CURVE_THRESHOLDS, McPlan { isolation_paths: 1000, delay_paths: 0, mfa_paths: 0 })?;
        let rates: Vec<(f64, f64)> =
            m.rows.iter().map(|r| (r.false_isolation_rate().unwrap(), r.false_isolation_std_err().unwrap())).collect();
        let monotone = rates.windows(2).all(|w| w[1].0 <= w[0].0 + 2.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt());
        let last_zero = rates.last().unwrap().0 == 0.0;
        pass &= hubs_ok && j_ok && monotone && last_zero;
        parts.push(format!(
            "S{id} hubs {:?} J {ga:.2}/{gb:.2} rates [{}]",
            gt.hubs,
            rates.iter().map(|r| format!("{:.3}", r.0)).collect::<Vec<_>>().join(" ")
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed.as_secs() <= 1800;
    Ok(outcome(pass, format!("{}; {:.0}s (<= 1800s)", parts.join("; "), elapsed.as_secs_f64())))
}

fn criterion_7() -> Result<Outcome, corrhub::Error> {
    let sc = Scenario::preset(2)?;
    let sim = Simulator::new(&sc)?;
    let gt = ground_truth(sim.sigma(), sc.n, 1000, PRESET_SEEDS[1])?;
    let (i_j, i_theta) = (kl_local(gt.j_max())?, kl_global(gt.theta)?);
    let thresholds = [3.0, 4.0, 5.0];
    let m = monte_carlo(&sim, &thresholds, McPlan { isolation_paths: 0, delay_paths: 500, mfa_paths: 1500 })?;
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &m.rows {
        let a = r.threshold;
        let (mfa, delay) = (r.mfa.unwrap(), r.delay.unwrap());
        let bound = 1.25 * (a / i_j + a / i_theta);
        pass &= mfa.mean >= 0.8 * a.exp() && delay.mean <= bound;
        parts.push(format!(
            "ln b={a}: MFA {:.1} (>= {:.1}, {} censored), delay {:.2} (<= {bound:.2})",
            mfa.mean,
            0.8 * a.exp(),
            mfa.censored,
            delay.mean
        ));
    }
    Ok(outcome(pass, format!("J* = {:.3}, theta = {:.3}; {}", gt.j_max(), gt.theta, parts.join("; "))))
}

fn criterion_8() -> Result<Outcome, corrhub::Error> {
    let mut checks = Vec::new();

    let mut tau_ok = true;
    let mut checked = 0;
    for id in 1..=3 {
        let mut sc = Scenario::preset(id)?;
        sc.paths = 100;
        for gamma in [Some(1), Some(20), None] {
            sc.gamma = gamma;
            sc.cap = 3000;
            for rec in run_paths(&Simulator::new(&sc)?)? {
                checked += 1;
                tau_ok &= match (rec.tau_v, rec.tau_u) {
                    (Some(v), Some(u)) => rec.tau_hb == Some(v.max(u)),
                    _ => rec.tau_hb.is_none() && rec.censored,
                };
            }
        }
    }
    checks.push((tau_ok, format!("tau_HB = max(tau_V, tau_U) on {checked} paths")));

    let mut shift_err: f64 = 0.0;
    for id in 1..=3 {
        let mut sc = Scenario::preset(id)?;
        sc.gamma = Some(10);
        let plain = Simulator::new(&sc)?;
        sc.mean_shift = 1e3;
        let shifted = Simulator::new(&sc)?;
        for seed in 0..10 {
            for (a, b) in plain.summaries(seed, 30)?.iter().zip(&shifted.summaries(seed, 30)?) {
                shift_err = shift_err.max((a.u - b.u).abs());
                for (x, y) in a.v.iter().zip(&b.v) {
                    shift_err = shift_err.max((x - y).abs());
                }
            }
        }
    }
    checks.push((shift_err <= 1e-10, format!("mean shift changes statistics by {shift_err:.1e}")));

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut iso_ok = true;
    for _ in 0..500 {
        let p = rng.random_range(2..40);
        let q = rng.random_range(1..=p);
        let g: Vec<f64> = (0..p).map(|_| rng.random_range(0..6) as f64).collect();
        let got = isolate(&g, q)?;
        let mut want: Vec<usize> = (0..p).collect();
        want.sort_by(|&a, &b| g[b].partial_cmp(&g[a]).unwrap().then(a.cmp(&b)));
        want.truncate(q);
        iso_ok &= got == want && isolate(&g, q)? == got;
    }
    checks.push((iso_ok, "isolate deterministic, ties to the smaller index".into()));

    let mut cfg_ok = RunConfig::parse_str(&RunConfig::default().serialize()).is_ok_and(|c| c == RunConfig::default());
    for _ in 0..200 {
        let mut c = RunConfig::default();
        let pairs = [
            ("n", rng.random_range(5..50).to_string()),
            ("p", rng.random_range(20..200).to_string()),
            ("a_u", rng.random_range(0.1..30.0f64).to_string()),
            ("a_v", if rng.random_bool(0.2) { "inf".into() } else { rng.random_range(0.1..30.0f64).to_string() }),
            ("eps_u", rng.random_range(0.01..3.0f64).to_string()),
            ("eps_v", rng.random_range(0.01..3.0f64).to_string()),
            ("q", rng.random_range(2..20).to_string()),
            ("window", if rng.random_bool(0.5) { "none".into() } else { rng.random_range(1..100).to_string() }),
            ("sidedness", if rng.random_bool(0.5) { "two-sided".into() } else { "one-sided".into() }),
            ("gamma", if rng.random_bool(0.3) { "inf".into() } else { rng.random_range(1..100).to_string() }),
            ("paths", rng.random_range(1..5000).to_string()),
            ("seed", rng.random::<u64>().to_string()),
            ("input", format!("in{}.csv, dir/x.csv", rng.random_range(0..9))),
            ("output", format!("out/{}.json", rng.random_range(0..9))),
            ("thresholds", format!("{}, {}", rng.random_range(0.1..1.0f64), rng.random_range(1.0..9.0f64))),
            ("scenario", rng.random_range(1..=3).to_string()),
            ("mean_shift", rng.random_range(0.0..2.0f64).to_string()),
        ];
        for (k, v) in &pairs {
            c.set(k, v).unwrap();
        }
        let back = RunConfig::parse_str(&c.serialize());
        cfg_ok &= back.is_ok_and(|b| b == c);
    }
    checks.push((cfg_ok, "config parse -> serialize -> parse identity".into()));

    Ok(outcome(checks.iter().all(|c| c.0), checks.into_iter().map(|c| c.1).collect::<Vec<_>>().join("; ")))
}

fn main() {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, res: Result<Outcome, corrhub::Error>| {
        let o = res.unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        failures += usize::from(!o.pass);
        println!("criterion {id} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    match null_suite() {
        Ok((r, t)) => {
            report(1, "null-law fidelity", Ok(criterion_1(&r, t)));
            report(2, "Poisson degree law", Ok(criterion_2(&r)));
        }
        Err(e) => {
            report(1, "null-law fidelity", Err(e.clone()));
            report(2, "Poisson degree law", Err(e));
        }
    }
    report(3, "special-function identity", criterion_3());
    report(4, "exponential-family oracles", criterion_4());
    report(5, "GLR engine equivalence", criterion_5());
    report(6, "consistency curves", criterion_6());
    report(7, "MFA and delay bounds", criterion_7());
    report(8, "structural invariants", criterion_8());
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
