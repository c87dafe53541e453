use alloc::vec::Vec;
use libm::{ceil, log, sqrt};
use rand::Rng;

use super::{check_level, HistogramSpec, TestFlags, TestKind, TestResult};
use crate::error::{domain, Result};
use crate::rng::{stream, Purpose};

/// `√n · sup (MĜ − Ĝ)` for a sample on `[0, 1]`, where `MĜ` is the least
/// concave majorant of the empirical CDF `Ĝ`. The supremum is attained at
/// left limits of `Ĝ` at sample points. `sorted` must be ascending.
pub fn lcm_statistic(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    // distinct abscissae with the CDF value there and its left limit
    let mut xs: Vec<(f64, f64, f64)> = Vec::with_capacity(n + 2);
    xs.push((0.0, 0.0, 0.0));
    let mut i = 0;
    while i < n {
        let x = sorted[i];
        let first = i;
        while i < n && sorted[i] == x {
            i += 1;
        }
        if x == 0.0 {
            xs[0].1 = i as f64 / nf;
            continue;
        }
        xs.push((x, i as f64 / nf, first as f64 / nf));
    }
    if xs.last().map(|v| v.0) != Some(1.0) {
        xs.push((1.0, 1.0, 1.0));
    }
    // upper hull by monotone chain
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(xs.len());
    for &(x, y, _) in &xs {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // drop the middle point when it lies on or below the chord
            if (y2 - y1) * (x - x1) <= (y - y1) * (x2 - x1) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, y));
    }
    let mut gap: f64 = 0.0;
    let mut seg = 0;
    for &(x, _, left) in &xs[1..] {
        while seg + 1 < hull.len() - 1 && hull[seg + 1].0 < x {
            seg += 1;
        }
        let (x1, y1) = hull[seg];
        let (x2, y2) = hull[(seg + 1).min(hull.len() - 1)];
        let m = if x2 > x1 { y1 + (y2 - y1) * (x - x1) / (x2 - x1) } else { y2 };
        gap = gap.max(m - left);
    }
    sqrt(nf) * gap
}

/// Simulated `1 − level` quantile of the statistic for `n` uniform draws.
/// Samples are built from exponential spacings, so no sorting is needed.
pub fn lcm_critical_value(n: usize, level: f64, reps: usize, seed: u64) -> Result<f64> {
    check_level(level)?;
    if n == 0 || reps == 0 {
        return Err(domain("LCM simulation size", 0.0));
    }
    let mut rng = stream(seed, Purpose::LcmCritical, n as u64);
    let mut stats = Vec::with_capacity(reps);
    let mut u = alloc::vec![0.0; n];
    for _ in 0..reps {
        let mut acc = 0.0;
        for v in u.iter_mut() {
            acc += -log(1.0 - rng.random::<f64>());
            *v = acc;
        }
        let total = acc - log(1.0 - rng.random::<f64>());
        for v in u.iter_mut() {
            *v /= total;
        }
        stats.push(lcm_statistic(&u));
    }
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = (ceil((1.0 - level) * reps as f64) as usize).clamp(1, reps);
    Ok(stats[k - 1])
}

/// LCM test on the window p-values. `critical` maps the window sample size
/// to a critical value, so callers can cache simulations.
pub fn lcm_test<C>(pvalues: &[f64], window: &HistogramSpec, level: f64, critical: C) -> Result<TestResult>
where
    C: FnOnce(usize) -> Result<f64>,
{
    window.validate()?;
    check_level(level)?;
    let mut xs = window.rescaled(pvalues);
    let n = xs.len();
    if n < 2 {
        let flags = TestFlags {
            insufficient_sample: true,
            ..TestFlags::default()
        };
        return Ok(TestResult::nonreject(TestKind::Lcm, n, flags));
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let stat = lcm_statistic(&xs);
    let crit = critical(n)?;
    Ok(TestResult {
        kind: TestKind::Lcm,
        statistic: stat,
        pvalue: None,
        critical_value: Some(crit),
        dof: None,
        reject: stat > crit,
        n,
        flags: TestFlags::default(),
    })
}

/// [`lcm_test`] with a fresh critical-value simulation.
pub fn lcm_test_simulated(
    pvalues: &[f64],
    window: &HistogramSpec,
    level: f64,
    reps: usize,
    seed: u64,
) -> Result<TestResult> {
    lcm_test(pvalues, window, level, |n| lcm_critical_value(n, level, reps, seed))
}
