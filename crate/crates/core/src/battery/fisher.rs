use libm::log;

use super::{check_level, HistogramSpec, TestFlags, TestKind, TestResult};
use crate::error::Result;
use crate::numkit::special::chi2_sf;

/// Fisher's combination test on the window p-values rescaled to `(0, 1]`:
/// `−2 Σ ln pᵢ` against χ² with `2n` degrees of freedom.
pub fn fisher_test(pvalues: &[f64], window: &HistogramSpec, level: f64) -> Result<TestResult> {
    window.validate()?;
    check_level(level)?;
    let ps = window.rescaled(pvalues);
    let zeros = if window.lower == 0.0 {
        pvalues.iter().filter(|&&p| p == 0.0).count()
    } else {
        0
    };
    let n = ps.len() + zeros;
    if n == 0 {
        let flags = TestFlags {
            insufficient_sample: true,
            ..TestFlags::default()
        };
        return Ok(TestResult::nonreject(TestKind::Fisher, 0, flags));
    }
    let mut flags = TestFlags::default();
    let mut stat: f64 = ps.iter().map(|&p| -2.0 * log(p)).sum();
    if zeros > 0 {
        stat = f64::INFINITY;
    }
    if stat == f64::INFINITY {
        flags.infinite_statistic = true;
    }
    let dof = 2 * n as u32;
    let pv = chi2_sf(stat, dof as f64);
    Ok(TestResult {
        kind: TestKind::Fisher,
        statistic: stat,
        pvalue: Some(pv),
        critical_value: None,
        dof: Some(dof),
        reject: pv <= level,
        n,
        flags,
    })
}
