//! Adaptive Gauss-Legendre quadrature.

use alloc::vec::Vec;
use libm::cos;

use crate::error::{domain, Error, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Parameters of an adaptive quadrature.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub abs_tol: f64,
    pub domain_split: Vec<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            node_count: 10,
            abs_tol: 1e-8,
            domain_split: Vec::new(),
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(domain("quadrature node count", self.node_count as f64));
        }
        if !(self.abs_tol > 0.0) {
            return Err(domain("quadrature tolerance", self.abs_tol));
        }
        if self.domain_split.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("breakpoints must be strictly increasing".into()));
        }
        Ok(())
    }
}

const MAX_PANELS: usize = 4000;
// Relative accuracy floor; large integrals are accepted at this precision.
const REL_FLOOR: f64 = 1e-12;

/// A precomputed rule plus tolerance.
#[derive(Debug, Clone)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    abs_tol: f64,
    splits: Vec<f64>,
}

impl Quadrature {
    pub fn new(spec: &QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        let (nodes, weights) = gauss_legendre(spec.node_count);
        Ok(Quadrature {
            nodes,
            weights,
            abs_tol: spec.abs_tol,
            splits: spec.domain_split.clone(),
        })
    }

    pub fn with_tol(node_count: usize, abs_tol: f64) -> Self {
        Quadrature::new(&QuadratureSpec {
            node_count,
            abs_tol,
            domain_split: Vec::new(),
        })
        .expect("valid quadrature")
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    /// Fixed rule on one panel.
    pub fn rule<F: FnMut(f64) -> Result<f64>>(&self, f: &mut F, a: f64, b: f64) -> Result<f64> {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let at = c + r * x;
            let v = f(at)?;
            if !v.is_finite() {
                return Err(Error::NonFinite { at });
            }
            s += w * v;
        }
        Ok(s * r)
    }

    /// Integrate `f` over `[a, b]` (finite), splitting at the configured
    /// breakpoints and at `extra`.
    pub fn integrate<F: FnMut(f64) -> Result<f64>>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
        extra: &[f64],
    ) -> Result<f64> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(domain("integration limit", if a.is_finite() { b } else { a }));
        }
        if a == b {
            return Ok(0.0);
        }
        if a > b {
            return Ok(-self.integrate(f, b, a, extra)?);
        }
        let mut cuts: Vec<f64> = Vec::with_capacity(self.splits.len() + extra.len() + 2);
        cuts.push(a);
        cuts.extend(
            self.splits
                .iter()
                .chain(extra)
                .copied()
                .filter(|&x| x > a && x < b),
        );
        cuts.push(b);
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup();
        let width = b - a;
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let tol = self.abs_tol * (w[1] - w[0]) / width;
            total += self.adapt(&mut f, w[0], w[1], tol)?;
        }
        Ok(total)
    }

    /// Globally adaptive bisection: always split the panel with the largest
    /// error estimate until the summed estimate meets `tol`.
    fn adapt<F: FnMut(f64) -> Result<f64>>(
        &self,
        f: &mut F,
        a: f64,
        b: f64,
        tol: f64,
    ) -> Result<f64> {
        let split = |f: &mut F, lo: f64, hi: f64, est: f64| -> Result<[(f64, f64, f64, f64); 2]> {
            let mid = 0.5 * (lo + hi);
            let left = self.rule(f, lo, mid)?;
            let right = self.rule(f, mid, hi)?;
            let err = (left + right - est).abs();
            Ok([(lo, mid, left, 0.5 * err), (mid, hi, right, 0.5 * err)])
        };
        let whole = self.rule(f, a, b)?;
        let mut panels: Vec<(f64, f64, f64, f64)> = split(f, a, b, whole)?.to_vec();
        loop {
            let total: f64 = panels.iter().map(|p| p.2).sum();
            let err: f64 = panels.iter().map(|p| p.3).sum();
            if err <= tol.max(REL_FLOOR * total.abs()) {
                return Ok(total);
            }
            if panels.len() >= MAX_PANELS {
                return Err(Error::Accuracy("adaptive quadrature panel budget exhausted"));
            }
            let (worst, _) = panels
                .iter()
                .enumerate()
                .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
            let (lo, hi, est, _) = panels.swap_remove(worst);
            if hi - lo <= 1e-15 * (1.0 + lo.abs()) {
                return Err(Error::Accuracy("adaptive quadrature panel underflow"));
            }
            panels.extend(split(f, lo, hi, est)?);
        }
    }

    /// Integrate over `[a, ∞)` via `x = a + t/(1-t)`.
    pub fn integrate_to_inf<F: FnMut(f64) -> Result<f64>>(&self, mut f: F, a: f64) -> Result<f64> {
        self.integrate(
            |t| {
                let s = 1.0 - t;
                Ok(f(a + t / s)? / (s * s))
            },
            0.0,
            1.0,
            &[],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::{exp, sin, sqrt};

    #[test]
    fn rule_is_exact_for_polynomials() {
        for n in 2..=20 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * libm::pow(*x, deg as f64)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((s - want).abs() < 1e-12, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn adaptive_handles_kinks_and_tails() {
        let q = Quadrature::with_tol(10, 1e-12);
        let v = q.integrate(|x| Ok(sqrt(x.abs())), -1.0, 1.0, &[]).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-10);
        let v = q.integrate(|x| Ok(sin(x)), 0.0, core::f64::consts::PI, &[]).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = q.integrate_to_inf(|x| Ok(exp(-x)), 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn non_finite_reports_location() {
        let q = Quadrature::with_tol(4, 1e-8);
        let err = q
            .integrate(|x| Ok(if x > 0.5 { f64::NAN } else { x }), 0.0, 1.0, &[])
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite { at } if at > 0.5));
    }

    #[test]
    fn spec_validation() {
        let bad = QuadratureSpec {
            node_count: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec {
            domain_split: alloc::vec![0.5, 0.5],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec {
            abs_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
