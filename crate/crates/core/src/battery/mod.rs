//! Tests of the null hypothesis of no p-hacking and no publication bias.
//!
//! All tests look at p-values inside an analysis window `(lower, upper]`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

mod binomial;
mod constraints;
mod cox_shi;
mod discontinuity;
mod fisher;
mod lcm;
mod qp;

pub use binomial::{binomial_test, BinomialBins};
pub use constraints::{build_constraints, ConstraintKind, ConstraintLabel, ConstraintSystem};
pub use cox_shi::cox_shi_test;
pub use discontinuity::{discontinuity_test, DiscontinuityConfig};
pub use fisher::fisher_test;
pub use lcm::{lcm_critical_value, lcm_statistic, lcm_test, lcm_test_simulated};
pub use qp::{ldp, nnls, QpError};

/// Equal-width histogram on the analysis window.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct HistogramSpec {
    pub lower: f64,
    pub upper: f64,
    pub bins: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            lower: 0.0,
            upper: 0.15,
            bins: 15,
        }
    }
}

impl HistogramSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lower >= 0.0 && self.lower < self.upper && self.upper <= 1.0) {
            return Err(Error::Config(format!(
                "histogram window ({}, {}] must satisfy 0 <= lower < upper <= 1",
                self.lower, self.upper
            )));
        }
        if self.bins < 2 {
            return Err(Error::Config("histogram needs at least 2 bins".into()));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.upper - self.lower) / self.bins as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        let w = self.width();
        (0..=self.bins)
            .map(|j| if j == self.bins { self.upper } else { self.lower + j as f64 * w })
            .collect()
    }

    pub fn contains(&self, p: f64) -> bool {
        p > self.lower && p <= self.upper
    }

    /// Counts in the bins `(x_{j−1}, x_j]`.
    pub fn counts(&self, pvalues: &[f64]) -> Vec<u64> {
        let mut c = alloc::vec![0u64; self.bins];
        let w = self.width();
        for &p in pvalues {
            if self.contains(p) {
                // ceil((p − lower)/w) − 1, guarded against rounding at edges
                let mut j = libm::ceil((p - self.lower) / w) as usize;
                j = j.clamp(1, self.bins);
                let edges_lo = self.lower + (j - 1) as f64 * w;
                if p <= edges_lo && j > 1 {
                    j -= 1;
                }
                c[j - 1] += 1;
            }
        }
        c
    }

    /// Window p-values rescaled to `(0, 1]`.
    pub fn rescaled(&self, pvalues: &[f64]) -> Vec<f64> {
        let span = self.upper - self.lower;
        pvalues
            .iter()
            .filter(|&&p| self.contains(p))
            .map(|&p| ((p - self.lower) / span).min(1.0))
            .collect()
    }
}

/// The tests in the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum TestKind {
    Binomial,
    Fisher,
    Lcm,
    Cs1,
    Csub,
    Cs2b,
    Discontinuity,
}

impl TestKind {
    pub const ALL: [TestKind; 7] = [
        TestKind::Binomial,
        TestKind::Fisher,
        TestKind::Lcm,
        TestKind::Cs1,
        TestKind::Csub,
        TestKind::Cs2b,
        TestKind::Discontinuity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Binomial => "binomial",
            TestKind::Fisher => "fisher",
            TestKind::Lcm => "lcm",
            TestKind::Cs1 => "cs1",
            TestKind::Csub => "csub",
            TestKind::Cs2b => "cs2b",
            TestKind::Discontinuity => "discontinuity",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }

    pub fn constraint_kind(self) -> Option<ConstraintKind> {
        match self {
            TestKind::Cs1 => Some(ConstraintKind::Cs1),
            TestKind::Csub => Some(ConstraintKind::Csub),
            TestKind::Cs2b => Some(ConstraintKind::Cs2b),
            _ => None,
        }
    }
}

/// Conditions under which a test did not run normally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestFlags {
    /// Singular covariance or non-convergent QP; counted as non-rejection.
    pub qp_singular_nonreject: bool,
    pub insufficient_sample: bool,
    pub bandwidth_truncated: bool,
    /// Some p-value was exactly zero.
    pub infinite_statistic: bool,
}

impl TestFlags {
    pub fn any(&self) -> bool {
        self.qp_singular_nonreject || self.insufficient_sample || self.bandwidth_truncated || self.infinite_statistic
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestResult {
    pub kind: TestKind,
    pub statistic: f64,
    pub pvalue: Option<f64>,
    pub critical_value: Option<f64>,
    /// Degrees of freedom of chi-squared references.
    pub dof: Option<u32>,
    pub reject: bool,
    /// Number of p-values the test used.
    pub n: usize,
    pub flags: TestFlags,
}

impl TestResult {
    pub(crate) fn nonreject(kind: TestKind, n: usize, flags: TestFlags) -> Self {
        TestResult {
            kind,
            statistic: 0.0,
            pvalue: None,
            critical_value: None,
            dof: None,
            reject: false,
            n,
            flags,
        }
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(crate::error::domain("test level", level))
    }
}
