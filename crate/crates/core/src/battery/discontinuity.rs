use alloc::vec;
use alloc::vec::Vec;
use libm::{pow, sqrt};

use super::{check_level, HistogramSpec, TestFlags, TestKind, TestResult};
use crate::error::{domain, Result};
use crate::linalg::{chol_solve, cholesky};
use crate::numkit::norm_sf;

/// Settings of the density discontinuity test.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct DiscontinuityConfig {
    pub cutoff: f64,
    /// Fixed bandwidth; otherwise `c · σ̂ · n^{−1/5}` over all supplied p-values.
    pub bandwidth: Option<f64>,
    pub bandwidth_constant: f64,
    pub min_per_side: usize,
}

impl Default for DiscontinuityConfig {
    fn default() -> Self {
        DiscontinuityConfig {
            cutoff: 0.05,
            bandwidth: None,
            bandwidth_constant: 2.0,
            min_per_side: 20,
        }
    }
}

/// Weights `w_i` with `f̂ = Σ w_i F̂(x_i)`: the slope of a kernel-weighted
/// quadratic fit of the empirical CDF around the cutoff.
fn slope_weights(xs: &[f64], cutoff: f64, h: f64) -> Option<Vec<f64>> {
    let mut m = [0.0; 9];
    let mut rows = Vec::with_capacity(xs.len());
    for &x in xs {
        let d = x - cutoff;
        let k = (1.0 - d.abs() / h).max(0.0);
        let r = [1.0, d / h, (d / h) * (d / h)];
        for a in 0..3 {
            for b in 0..3 {
                m[a * 3 + b] += k * r[a] * r[b];
            }
        }
        rows.push((k, r));
    }
    cholesky(&mut m, 3, 1e-12).ok()?;
    let mut q = [0.0, 1.0, 0.0];
    chol_solve(&m, 3, &mut q);
    // coefficient on d/h, rescaled to d
    Some(rows.iter().map(|(k, r)| k * (q[0] * r[0] + q[1] * r[1] + q[2] * r[2]) / h).collect())
}

/// Local quadratic test for a jump in the p-value density at the cutoff.
///
/// Each side's density is the slope of a triangular-kernel quadratic fit of
/// the empirical CDF. Both estimates are linear in the indicators
/// `1{x_j ≤ x_i}`, which gives an influence-function standard error for
/// the difference, right minus left.
pub fn discontinuity_test(
    pvalues: &[f64],
    window: &HistogramSpec,
    cfg: &DiscontinuityConfig,
    level: f64,
) -> Result<TestResult> {
    window.validate()?;
    check_level(level)?;
    let c = cfg.cutoff;
    if !(c > window.lower && c < window.upper) {
        return Err(domain("discontinuity cutoff", c));
    }
    let mut xs: Vec<f64> = pvalues.iter().copied().filter(|&p| window.contains(p)).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    let mut flags = TestFlags::default();
    let insufficient = |flags: TestFlags| {
        Ok(TestResult::nonreject(
            TestKind::Discontinuity,
            n,
            TestFlags {
                insufficient_sample: true,
                ..flags
            },
        ))
    };
    if n < 2 * cfg.min_per_side {
        return insufficient(flags);
    }
    let nf = n as f64;
    let mut h = match cfg.bandwidth {
        Some(b) if b > 0.0 => b,
        Some(b) => return Err(domain("bandwidth", b)),
        None => {
            // rule of thumb on the full sample, then truncated to the window
            let all: Vec<f64> = pvalues.iter().copied().filter(|p| p.is_finite()).collect();
            let m = all.len() as f64;
            let mean = all.iter().sum::<f64>() / m;
            let var = all.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
            cfg.bandwidth_constant * sqrt(var) * pow(m, -0.2)
        }
    };
    let h_max = (c - window.lower).min(window.upper - c);
    if h > h_max {
        h = h_max;
        flags.bandwidth_truncated = true;
    }
    // tie groups: first index and one past the last index of each value
    let mut first = vec![0usize; n];
    let mut last = vec![0usize; n];
    let mut i = 0;
    while i < n {
        let mut e = i;
        while e < n && xs[e] == xs[i] {
            e += 1;
        }
        for t in i..e {
            first[t] = i;
            last[t] = e;
        }
        i = e;
    }
    let left_lo = xs.partition_point(|&x| x <= c - h);
    let split = xs.partition_point(|&x| x <= c);
    let right_hi = xs.partition_point(|&x| x < c + h);
    if split - left_lo < cfg.min_per_side || right_hi - split < cfg.min_per_side {
        return insufficient(flags);
    }
    let side = |a: usize, b: usize| -> Option<(f64, Vec<f64>)> {
        let w = slope_weights(&xs[a..b], c, h)?;
        let est = (a..b).map(|i| w[i - a] * last[i] as f64 / nf).sum();
        // suffix sums over the fit range
        let mut suffix = vec![0.0; b - a + 1];
        for i in (a..b).rev() {
            suffix[i - a] = suffix[i - a + 1] + w[i - a];
        }
        // S_j = Σ_{i in range, x_i ≥ x_j} w_i
        let s = (0..n)
            .map(|j| {
                let from = first[j].max(a);
                if from >= b {
                    0.0
                } else {
                    suffix[from - a]
                }
            })
            .collect();
        Some((est, s))
    };
    let (Some((fl, sl)), Some((fr, sr))) = (side(left_lo, split), side(split, right_hi)) else {
        return insufficient(flags);
    };
    let d: Vec<f64> = sr.iter().zip(&sl).map(|(r, l)| r - l).collect();
    let dm = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|x| (x - dm) * (x - dm)).sum::<f64>() / (nf * nf);
    if !(var > 0.0) {
        return insufficient(flags);
    }
    let stat = (fr - fl) / sqrt(var);
    let pv = 2.0 * norm_sf(stat.abs());
    Ok(TestResult {
        kind: TestKind::Discontinuity,
        statistic: stat,
        pvalue: Some(pv),
        critical_value: None,
        dof: None,
        reject: pv <= level,
        n,
        flags,
    })
}
