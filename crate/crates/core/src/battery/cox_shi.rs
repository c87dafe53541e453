use alloc::vec;
use alloc::vec::Vec;

use super::qp::ldp;
use super::{check_level, ConstraintKind, ConstraintSystem, HistogramSpec, TestFlags, TestKind, TestResult};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, row_rank};
use crate::numkit::special::{chi2_quantile, chi2_sf};

const RIDGE: f64 = 1e-10;
const ACTIVE_TOL: f64 = 1e-8;

/// Conditional chi-squared test of `A π ≤ b` on the window bin masses.
///
/// `T = n · min_{Aμ ≤ b} (π̂ − μ)ᵀ Ω̂⁻¹ (π̂ − μ)` with the multinomial
/// covariance `Ω̂`; degrees of freedom are the rank of the binding rows at
/// the minimizer. Empty bins, a singular `Ω̂` or a failed QP give a flagged
/// non-rejection.
pub fn cox_shi_test(
    pvalues: &[f64],
    constraints: &ConstraintSystem,
    spec: &HistogramSpec,
    level: f64,
) -> Result<TestResult> {
    spec.validate()?;
    check_level(level)?;
    let kind = constraints.kind.test_kind();
    let k = spec.bins - 1;
    if constraints.cols != k {
        return Err(Error::Config("constraint system does not match the histogram".into()));
    }
    let counts = spec.counts(pvalues);
    let n: u64 = counts.iter().sum();
    let nf = n as f64;
    let mut flags = TestFlags::default();
    if n == 0 {
        flags.insufficient_sample = true;
        return Ok(TestResult::nonreject(kind, 0, flags));
    }
    if counts.contains(&0) {
        flags.qp_singular_nonreject = true;
        return Ok(TestResult::nonreject(kind, n as usize, flags));
    }
    let pi: Vec<f64> = counts[..k].iter().map(|&c| c as f64 / nf).collect();
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            l[i * k + j] = -pi[i] * pi[j];
        }
        l[i * k + i] += pi[i] + RIDGE;
    }
    if cholesky(&mut l, k, 1e-12).is_err() {
        flags.qp_singular_nonreject = true;
        return Ok(TestResult::nonreject(kind, n as usize, flags));
    }
    let Some((t, dof)) = projection(&pi, &l, nf, constraints) else {
        flags.qp_singular_nonreject = true;
        return Ok(TestResult::nonreject(kind, n as usize, flags));
    };
    if t <= 1e-10 || dof == 0 {
        return Ok(TestResult {
            kind,
            statistic: t,
            pvalue: Some(1.0),
            critical_value: None,
            dof: Some(dof as u32),
            reject: false,
            n: n as usize,
            flags,
        });
    }
    let crit = chi2_quantile(1.0 - level, dof as f64)?;
    Ok(TestResult {
        kind,
        statistic: t,
        pvalue: Some(chi2_sf(t, dof as f64)),
        critical_value: Some(crit),
        dof: Some(dof as u32),
        reject: t > crit,
        n: n as usize,
        flags,
    })
}

/// Statistic and active-set rank for moments `pi` with covariance `L Lᵀ / n`.
pub(crate) fn projection(pi: &[f64], l: &[f64], nf: f64, constraints: &ConstraintSystem) -> Option<(f64, usize)> {
    let k = pi.len();
    // μ = π̂ + L v: constraints become (−A L) v ≥ A π̂ − b
    let m = constraints.rows();
    let mut g = vec![0.0; m * k];
    let mut h = vec![0.0; m];
    for r in 0..m {
        let row = constraints.row(r);
        for c in 0..k {
            g[r * k + c] = -(c..k).map(|i| row[i] * l[i * k + c]).sum::<f64>();
        }
        h[r] = row.iter().zip(pi).map(|(a, p)| a * p).sum::<f64>() - constraints.b[r];
    }
    let v = ldp(&g, m, k, &h).ok()?;
    let t = nf * v.iter().map(|x| x * x).sum::<f64>();
    let mu: Vec<f64> = (0..k)
        .map(|i| pi[i] + (0..=i).map(|c| l[i * k + c] * v[c]).sum::<f64>())
        .collect();
    let mut active = Vec::new();
    for r in 0..m {
        let row = constraints.row(r);
        let s: f64 = row.iter().zip(&mu).map(|(a, x)| a * x).sum();
        if (s - constraints.b[r]).abs() <= ACTIVE_TOL {
            active.extend_from_slice(row);
        }
    }
    Some((t, row_rank(&active, active.len() / k, k, 1e-10)))
}

impl ConstraintKind {
    pub fn test_kind(self) -> TestKind {
        match self {
            ConstraintKind::Cs1 => TestKind::Cs1,
            ConstraintKind::Csub => TestKind::Csub,
            ConstraintKind::Cs2b => TestKind::Cs2b,
        }
    }
}
