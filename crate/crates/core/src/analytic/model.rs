use libm::{exp, sqrt};

use super::rhohat::RhoHatLaw;
use crate::error::{domain, Error, Result};
use crate::numkit::{inv_upper, mixture_integral, norm_cdf, EffectDistribution, Quadrature};

const SQRT2: f64 = core::f64::consts::SQRT_2;

/// Which kind of specification search produced the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Scenario {
    CovariateSelection,
    IvSelection,
    DatasetSelection,
    VarianceBandwidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Strategy {
    NoHack,
    Threshold,
    Minimum,
}

/// An analytic p-curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PCurveModel {
    pub scenario: Scenario,
    pub strategy: Strategy,
    pub alpha: f64,
    /// Correlation of the two covariate-selection statistics, `1 − γ²`.
    pub rho: f64,
    /// Number of datasets.
    pub k: u32,
    pub kappa: f64,
    pub n: usize,
    pub pi: EffectDistribution,
}

impl PCurveModel {
    pub fn new(scenario: Scenario, strategy: Strategy, pi: EffectDistribution) -> Self {
        PCurveModel {
            scenario,
            strategy,
            alpha: 0.05,
            rho: 0.5,
            k: 2,
            kappa: 0.5,
            n: 200,
            pi,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_k(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.pi.validate()?;
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(domain("significance threshold", self.alpha));
        }
        match self.scenario {
            Scenario::CovariateSelection => {
                if !(self.rho > 0.0 && self.rho < 1.0) {
                    return Err(domain("covariate correlation", self.rho));
                }
            }
            Scenario::DatasetSelection => {
                if self.k < 1 {
                    return Err(domain("dataset count", 0.0));
                }
            }
            Scenario::VarianceBandwidth => {
                if !(self.kappa > 0.0 && self.kappa.is_finite()) {
                    return Err(domain("kernel weight", self.kappa));
                }
            }
            Scenario::IvSelection => {}
        }
        Ok(())
    }

    /// Points where the density may jump.
    pub fn breakpoints(&self) -> [f64; 2] {
        [self.alpha, 0.5]
    }

    /// Single-effect density `g_h(p)`.
    pub fn density_at(&self, p: f64, h: f64, law: Option<&RhoHatLaw>) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(domain("p-value", p));
        }
        let z = inv_upper(p);
        let base = exp(h * z - 0.5 * h * h);
        if self.strategy == Strategy::NoHack {
            return Ok(base);
        }
        let ups = match self.scenario {
            Scenario::CovariateSelection => upsilon_cov(p, z, h, self.alpha, self.rho, self.strategy),
            Scenario::IvSelection => {
                // The Υ factor multiplies a ratio that can under/overflow, so
                // the IV density is assembled directly.
                return Ok(iv_density(p, z, h, self.alpha, self.strategy));
            }
            Scenario::DatasetSelection => upsilon_dataset(p, z, h, self.alpha, self.k, self.strategy),
            Scenario::VarianceBandwidth => {
                let law = law.ok_or_else(|| {
                    Error::Config("variance scenario needs a residual autocorrelation law".into())
                })?;
                return variance_density(p, z, h, self, law);
            }
        };
        Ok(base * ups)
    }

    /// Density mixed over Π.
    pub fn density(&self, p: f64, law: Option<&RhoHatLaw>, quad: &Quadrature) -> Result<f64> {
        mixture_integral(|h| self.density_at(p, h, law), &self.pi, quad)
    }
}

fn upsilon_cov(p: f64, z: f64, h: f64, alpha: f64, rho: f64, strategy: Strategy) -> f64 {
    let zh = z - h;
    let upper = 2.0 * norm_cdf(zh * sqrt((1.0 - rho) / (1.0 + rho)));
    match strategy {
        Strategy::Threshold if p <= alpha => {
            let za = inv_upper(alpha) - h;
            1.0 + norm_cdf((za - rho * zh) / sqrt(1.0 - rho * rho))
        }
        _ => upper,
    }
}

fn upsilon_dataset(p: f64, z: f64, h: f64, alpha: f64, k: u32, strategy: Strategy) -> f64 {
    let zh = z - h;
    let kf = k as f64;
    let phi = norm_cdf(zh);
    match strategy {
        Strategy::Threshold if p <= alpha => {
            let za = inv_upper(alpha) - h;
            1.0 + (kf - 1.0) * norm_cdf(za) * libm::pow(phi, kf - 2.0)
        }
        _ => kf * libm::pow(phi, kf - 1.0),
    }
}

fn iv_density(p: f64, z: f64, h: f64, alpha: f64, strategy: Strategy) -> f64 {
    let zh = z - h;
    // φ(z_h)/φ(z₀) and φ(z_{√2h})/φ(z₀), both as exponentials.
    let base = exp(h * z - 0.5 * h * h);
    let base2 = exp(SQRT2 * h * z - h * h);
    let d = |q: f64| SQRT2 * inv_upper(q) - 2.0 * h;
    if p > 0.5 {
        return base * 2.0 * norm_cdf(zh);
    }
    if strategy == Strategy::Threshold && p <= alpha {
        return base2 + base * 2.0 * norm_cdf(d(alpha) - zh);
    }
    let zeta = 1.0 - 2.0 * norm_cdf((1.0 - SQRT2) * z);
    base2 * zeta + base * 2.0 * norm_cdf(d(p) - zh)
}

fn variance_density(p: f64, z: f64, h: f64, m: &PCurveModel, law: &RhoHatLaw) -> Result<f64> {
    let kappa = m.kappa;
    let r_min = -0.5 / kappa;
    let base = exp(h * z - 0.5 * h * h);
    // ∫ ω φ(z ω − h) η dr / φ(z)
    let tail = |a: f64, b: f64| -> Result<f64> {
        law.integrate(
            |r| {
                let w = sqrt((1.0 + 2.0 * kappa * r).max(0.0));
                let x = z * w - h;
                w * exp(0.5 * (z * z - x * x))
            },
            a,
            b,
        )
    };
    let below = law.cdf(r_min);
    let at_zero = law.cdf(0.0);
    if p > 0.5 {
        return Ok(base * at_zero + tail(0.0, 1.0)?);
    }
    if m.strategy == Strategy::Threshold && p <= m.alpha {
        let ratio = inv_upper(m.alpha) / z;
        let l = (ratio * ratio - 1.0) / (2.0 * kappa);
        return Ok(base + tail(r_min, l.min(0.0))?);
    }
    Ok(base * (1.0 - at_zero + below) + tail(r_min, 0.0)?)
}

fn default_quad() -> Quadrature {
    Quadrature::with_tol(10, 1e-12)
}

fn expect(model: &PCurveModel, scenario: Scenario) -> Result<()> {
    if model.scenario != scenario {
        return Err(Error::Config("model scenario does not match the requested curve".into()));
    }
    model.validate()
}

/// Null p-curve `exp(h z₀(p) − h²/2)` for a single effect.
pub fn null_pcurve(p: f64, h: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("p-value", p));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(domain("effect", h));
    }
    let z = inv_upper(p);
    Ok(exp(h * z - 0.5 * h * h))
}

/// Covariate-selection p-curve.
pub fn g_cov(p: f64, model: &PCurveModel) -> Result<f64> {
    expect(model, Scenario::CovariateSelection)?;
    model.density(p, None, &default_quad())
}

/// IV-selection p-curve.
pub fn g_iv(p: f64, model: &PCurveModel) -> Result<f64> {
    expect(model, Scenario::IvSelection)?;
    model.density(p, None, &default_quad())
}

/// Dataset-selection p-curve.
pub fn g_dataset(p: f64, model: &PCurveModel) -> Result<f64> {
    expect(model, Scenario::DatasetSelection)?;
    model.density(p, None, &default_quad())
}

/// Variance-bandwidth p-curve.
pub fn g_variance(p: f64, model: &PCurveModel, law: &RhoHatLaw) -> Result<f64> {
    expect(model, Scenario::VarianceBandwidth)?;
    model.density(p, Some(law), &default_quad())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{bin_proportions_with_breaks, build_rhohat_law};
    use crate::numkit::{norm_quantile, EffectDistribution as Pi};
    use alloc::vec::Vec;

    fn model(s: Scenario, t: Strategy, h: f64) -> PCurveModel {
        PCurveModel::new(s, t, Pi::point(h))
    }

    fn total_mass(m: &PCurveModel, law: Option<&RhoHatLaw>) -> f64 {
        let q = default_quad();
        bin_proportions_with_breaks(|p| m.density(p, law, &q), &[0.0, 1.0], &m.breakpoints())
            .unwrap()[0]
    }

    #[test]
    fn null_examples() {
        assert_eq!(null_pcurve(0.3, 0.0).unwrap(), 1.0);
        assert!((null_pcurve(0.05, 1.0).unwrap() - 3.142).abs() < 2e-3);
        assert!(null_pcurve(0.0, 1.0).is_err());
    }

    #[test]
    fn densities_integrate_to_one() {
        let law = build_rhohat_law(200, 100_000, 17).unwrap();
        for s in [
            Scenario::CovariateSelection,
            Scenario::IvSelection,
            Scenario::DatasetSelection,
            Scenario::VarianceBandwidth,
        ] {
            for t in [Strategy::NoHack, Strategy::Threshold, Strategy::Minimum] {
                for h in [0.0, 1.0, 2.0] {
                    let m = model(s, t, h).with_rho(0.75).with_k(5);
                    let tol = if s == Scenario::VarianceBandwidth { 1e-3 } else { 1e-6 };
                    let v = total_mass(&m, Some(&law));
                    assert!((v - 1.0).abs() < tol, "{s:?} {t:?} h={h}: {v}");
                }
            }
        }
        let mixed = PCurveModel::new(
            Scenario::CovariateSelection,
            Strategy::Threshold,
            Pi::Gamma { alpha: 1.5, beta: 1.2 },
        );
        assert!((total_mass(&mixed, None) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn covariate_examples() {
        let m = model(Scenario::CovariateSelection, Strategy::Minimum, 0.0).with_rho(1e-9);
        for &p in &[0.01, 0.3, 0.8] {
            assert!((g_cov(p, &m).unwrap() - 2.0 * (1.0 - p)).abs() < 1e-6);
        }
        let m = model(Scenario::CovariateSelection, Strategy::Threshold, 0.0).with_rho(0.5);
        assert!((g_cov(0.5, &m).unwrap() - 1.0).abs() < 1e-12);
        let m = m.with_rho(1e-9);
        let left = g_cov(0.05, &m).unwrap();
        let right = g_cov(0.05 + 1e-12, &m).unwrap();
        let z = norm_quantile(0.95).unwrap();
        assert!((left - (1.0 + norm_cdf(z))).abs() < 1e-6);
        assert!((right - 2.0 * norm_cdf(z)).abs() < 1e-6);
        assert!((right - left + 0.05).abs() < 1e-6);
        assert!(g_cov(0.1, &m.clone().with_rho(0.0)).is_err());
    }

    #[test]
    fn iv_examples() {
        let m = model(Scenario::IvSelection, Strategy::Minimum, 0.0);
        assert!((g_iv(0.75, &m).unwrap() - 0.5).abs() < 1e-3);
        let q = default_quad();
        let size = bin_proportions_with_breaks(|p| m.density(p, None, &q), &[0.0, 0.05], &[])
            .unwrap()[0];
        assert!((size - 0.11).abs() < 0.005, "{size}");
        for h in [0.0, 0.7, 2.0] {
            let a = model(Scenario::IvSelection, Strategy::Minimum, h);
            let b = model(Scenario::IvSelection, Strategy::Threshold, h);
            for &p in &[0.51, 0.7, 0.99] {
                assert_eq!(g_iv(p, &a).unwrap(), g_iv(p, &b).unwrap());
            }
        }
    }

    #[test]
    fn dataset_examples() {
        for k in [1u32, 2, 5] {
            let m = model(Scenario::DatasetSelection, Strategy::Minimum, 0.0).with_k(k);
            for &p in &[0.02, 0.4, 0.9] {
                let want = k as f64 * libm::pow(1.0 - p, k as f64 - 1.0);
                assert!((g_dataset(p, &m).unwrap() - want).abs() < 1e-10);
            }
        }
        for t in [Strategy::Threshold, Strategy::Minimum] {
            let m = model(Scenario::DatasetSelection, t, 1.4).with_k(1);
            for &p in &[0.01, 0.3] {
                assert!((g_dataset(p, &m).unwrap() - null_pcurve(p, 1.4).unwrap()).abs() < 1e-12);
            }
        }
        let d = model(Scenario::DatasetSelection, Strategy::Threshold, 1.1).with_k(2);
        let c = model(Scenario::CovariateSelection, Strategy::Threshold, 1.1).with_rho(0.0);
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let a = d.density_at(p, 1.1, None).unwrap();
            let b = c.density_at(p, 1.1, None).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
        assert!(g_dataset(0.1, &d.clone().with_k(0)).is_err());
    }

    #[test]
    fn structural_properties() {
        let law = build_rhohat_law(200, 100_000, 4).unwrap();
        let grid: Vec<f64> = (1..500).map(|i| i as f64 / 1000.0).collect();
        for s in [
            Scenario::CovariateSelection,
            Scenario::IvSelection,
            Scenario::DatasetSelection,
            Scenario::VarianceBandwidth,
        ] {
            for h in [0.0, 1.0, 2.5] {
                let nohack = model(s, Strategy::NoHack, h).with_rho(0.6).with_k(3);
                for &p in grid.iter().step_by(37) {
                    let v = nohack.density_at(p, h, Some(&law)).unwrap();
                    assert_eq!(v, null_pcurve(p, h).unwrap());
                }
                let min = model(s, Strategy::Minimum, h).with_rho(0.6).with_k(3);
                let vals: Vec<f64> = grid
                    .iter()
                    .map(|&p| min.density_at(p, h, Some(&law)).unwrap())
                    .collect();
                let slack = if s == Scenario::VarianceBandwidth { 1e-6 } else { 1e-12 };
                assert!(vals.windows(2).all(|w| w[1] <= w[0] + slack), "{s:?} h={h}");
            }
        }
        for h in [0.0, 1.0, 3.0] {
            let t = model(Scenario::CovariateSelection, Strategy::Threshold, h).with_rho(0.3);
            for i in 1..=50 {
                let p = i as f64 / 1000.0;
                assert!(t.density_at(p, h, None).unwrap() >= null_pcurve(p, h).unwrap());
            }
        }
    }

    #[test]
    fn variance_jump_at_half() {
        let law = build_rhohat_law(200, 100_000, 8).unwrap();
        let m = model(Scenario::VarianceBandwidth, Strategy::Minimum, 0.0);
        let left = m.density_at(0.5, 0.0, Some(&law)).unwrap();
        let right = m.density_at(0.5 + 1e-12, 0.0, Some(&law)).unwrap();
        assert!(right - left > 0.01, "{left} {right}");
        assert!(m.density_at(0.3, 0.0, None).is_err());
    }
}
