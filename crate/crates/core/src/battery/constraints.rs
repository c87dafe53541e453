use alloc::vec;
use alloc::vec::Vec;

use super::HistogramSpec;
use crate::analytic::{null_bound_integral, BinKernel, Sided};
use crate::error::{Error, Result};

/// Which restrictions the Cox-Shi test imposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum ConstraintKind {
    /// Non-increasing bin masses.
    Cs1,
    /// Upper bounds on the p-curve and its first two derivatives.
    Csub,
    /// Monotonicity, 2-monotonicity and the bounds.
    Cs2b,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum ConstraintLabel {
    Monotonicity,
    TwoMonotonicity,
    Bound0,
    Bound1,
    Bound2,
}

/// `A π ≤ b` on the first `J − 1` bin masses; the last mass is
/// `1 − Σ π_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub kind: ConstraintKind,
    /// Row-major, `rows × cols`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub labels: Vec<ConstraintLabel>,
    pub cols: usize,
}

impl ConstraintSystem {
    pub fn rows(&self) -> usize {
        self.b.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    /// Add a row given on all `J` masses.
    fn push_full(&mut self, full: &[f64], rhs: f64, label: ConstraintLabel) {
        let last = full[self.cols];
        self.a.extend(full[..self.cols].iter().map(|c| c - last));
        self.b.push(rhs - last);
        self.labels.push(label);
    }
}

/// Build the restrictions of a Cox-Shi variant on the histogram `spec`.
/// Bound rows need `spec.lower = 0`: they are bounds on the p-curve
/// conditional on `p ≤ spec.upper`.
pub fn build_constraints(kind: ConstraintKind, spec: &HistogramSpec, sided: Sided) -> Result<ConstraintSystem> {
    spec.validate()?;
    let j = spec.bins;
    let mut cs = ConstraintSystem {
        kind,
        a: Vec::new(),
        b: Vec::new(),
        labels: Vec::new(),
        cols: j - 1,
    };
    let unit = |terms: &[(usize, f64)]| {
        let mut v = vec![0.0; j];
        for &(i, c) in terms {
            v[i] += c;
        }
        v
    };
    if matches!(kind, ConstraintKind::Cs1 | ConstraintKind::Cs2b) {
        for i in 1..j {
            cs.push_full(&unit(&[(i, 1.0), (i - 1, -1.0)]), 0.0, ConstraintLabel::Monotonicity);
        }
    }
    if kind == ConstraintKind::Cs2b {
        for i in 1..j - 1 {
            cs.push_full(
                &unit(&[(i - 1, -1.0), (i, 2.0), (i + 1, -1.0)]),
                0.0,
                ConstraintLabel::TwoMonotonicity,
            );
        }
    }
    if matches!(kind, ConstraintKind::Csub | ConstraintKind::Cs2b) {
        if spec.lower != 0.0 {
            return Err(Error::Config("bound constraints need a window starting at 0".into()));
        }
        let w = spec.width();
        let cap = spec.upper;
        let x = |i: usize| i as f64 * w;
        for i in 0..j {
            let b = null_bound_integral(0, sided, cap, BinKernel::Box { lo: x(i), w })?;
            cs.push_full(&unit(&[(i, 1.0)]), b, ConstraintLabel::Bound0);
        }
        for i in 1..j {
            let b = null_bound_integral(1, sided, cap, BinKernel::Tent { lo: x(i - 1), w })?;
            cs.push_full(&unit(&[(i - 1, 1.0), (i, -1.0)]), b, ConstraintLabel::Bound1);
        }
        for i in 1..j - 1 {
            let b = null_bound_integral(2, sided, cap, BinKernel::Spline2 { lo: x(i - 1), w })?;
            cs.push_full(
                &unit(&[(i - 1, 1.0), (i, -2.0), (i + 1, 1.0)]),
                b,
                ConstraintLabel::Bound2,
            );
        }
    }
    Ok(cs)
}
