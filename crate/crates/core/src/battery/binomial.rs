use super::{check_level, TestFlags, TestKind, TestResult};
use crate::error::{Error, Result};
use crate::numkit::special::binomial_sf;

/// Two adjacent bins below a significance cutoff: `far = [a, b)` and
/// `near = [b, c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct BinomialBins {
    pub far: [f64; 2],
    pub near: [f64; 2],
}

impl Default for BinomialBins {
    fn default() -> Self {
        BinomialBins {
            far: [0.04, 0.045],
            near: [0.045, 0.05],
        }
    }
}

impl BinomialBins {
    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.far;
        let [c, d] = self.near;
        if !(a < b && c < d) {
            return Err(Error::Config("binomial bins must have positive width".into()));
        }
        if b > c {
            return Err(Error::Config("binomial bins overlap".into()));
        }
        Ok(())
    }
}

/// Exact one-sided Binomial test that the bin nearer the cutoff holds at
/// most half of the p-values landing in either bin.
pub fn binomial_test(pvalues: &[f64], bins: &BinomialBins, level: f64) -> Result<TestResult> {
    bins.validate()?;
    check_level(level)?;
    let k = pvalues.iter().filter(|&&p| p >= bins.near[0] && p <= bins.near[1]).count() as u64;
    let far = pvalues.iter().filter(|&&p| p >= bins.far[0] && p < bins.far[1]).count() as u64;
    let m = k + far;
    if m == 0 {
        let flags = TestFlags {
            insufficient_sample: true,
            ..TestFlags::default()
        };
        return Ok(TestResult::nonreject(TestKind::Binomial, 0, flags));
    }
    let pv = binomial_sf(k, m, 0.5);
    Ok(TestResult {
        kind: TestKind::Binomial,
        statistic: k as f64,
        pvalue: Some(pv),
        critical_value: None,
        dof: None,
        reject: pv <= level,
        n: m as usize,
        flags: TestFlags::default(),
    })
}
