//! Size distortions and estimator biases induced by p-hacking.

use alloc::string::String;
use alloc::vec::Vec;
use libm::sqrt;

use crate::analytic::{RhoHatLaw, Scenario, Strategy};
use crate::error::{domain, Result};
use crate::numkit::{bvn_cdf, inv_upper, norm_cdf, norm_pdf, Quadrature};

const SQRT2: f64 = core::f64::consts::SQRT_2;

/// One row of a size/bias report.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub scenario: Scenario,
    pub strategy: Strategy,
    pub nominal_size: f64,
    pub empirical_size: f64,
    pub bias: f64,
    pub params: Vec<(String, f64)>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(domain("nominal size", alpha))
    }
}

/// Rejection rate at `h = 0` of covariate selection; identical for the
/// threshold and minimum strategies.
pub fn size_cov(alpha: f64, rho: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(domain("covariate correlation", rho));
    }
    if rho == 0.0 {
        return Ok(2.0 * alpha - alpha * alpha);
    }
    let z = inv_upper(alpha);
    Ok(1.0 - bvn_cdf(z, z, rho)?)
}

/// Rejection rate at `h = 0` of IV selection.
pub fn size_iv(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let z = inv_upper(alpha);
    let lo = (SQRT2 - 1.0) * z;
    let q = Quadrature::with_tol(10, 1e-12);
    let tail = q.integrate(|x| Ok(norm_pdf(x) * norm_cdf(SQRT2 * z - x)), lo, z, &[])?;
    Ok(1.0 - norm_cdf(z) * norm_cdf(lo) - tail)
}

/// Rejection rate at `h = 0` of variance-bandwidth selection.
pub fn size_variance(alpha: f64, law: &RhoHatLaw, kappa: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(domain("nominal size", alpha));
    }
    if !(kappa > 0.0) {
        return Err(domain("kernel weight", kappa));
    }
    let z = inv_upper(alpha);
    let r_min = -0.5 / kappa;
    let inner = law.integrate(|r| norm_cdf(z * sqrt(1.0 + 2.0 * kappa * r)), r_min, 0.0)?;
    let v = alpha + (1.0 - alpha) * (law.cdf(0.0) - law.cdf(r_min)) - inner;
    Ok(v.max(alpha))
}

/// Bias `E β̂_r − β` of the reported OLS estimate under covariate selection.
pub fn bias_cov(h: f64, rho: f64, alpha: f64, n: usize, strategy: Strategy) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        if rho == 1.0 {
            return Ok(0.0);
        }
        return Err(domain("covariate correlation", rho));
    }
    if n < 1 {
        return Err(domain("sample size", 0.0));
    }
    check_alpha(alpha)?;
    let scale = 1.0 / sqrt(n as f64 * rho);
    let lead = sqrt(2.0 * (1.0 - rho)) * norm_pdf(0.0);
    Ok(match strategy {
        Strategy::NoHack => 0.0,
        Strategy::Minimum => lead * scale,
        Strategy::Threshold => {
            let za = inv_upper(alpha) - h;
            let a = lead * norm_cdf(sqrt(2.0 / (1.0 + rho)) * za);
            let b = (1.0 - rho) * norm_pdf(za) * (1.0 - norm_cdf(sqrt((1.0 - rho) / (1.0 + rho)) * za));
            (a + b) * scale
        }
    })
}

/// Mean of the asymptotic distribution of `√N (β̂_r − β)` under IV selection.
pub fn bias_iv(h: f64, alpha: f64, gamma: f64, strategy: Strategy) -> Result<f64> {
    if gamma == 0.0 || !gamma.is_finite() {
        return Err(domain("first-stage coefficient", gamma));
    }
    check_alpha(alpha)?;
    let g = 1.0 / gamma.abs();
    let c = sqrt(2.0 - SQRT2);
    let head = g / c * norm_pdf(sqrt((SQRT2 - 1.0) / SQRT2) * h);
    let minimum = head * norm_cdf(h / c) + g * SQRT2 * norm_pdf(0.0) * (1.0 - norm_cdf(SQRT2 * h));
    Ok(match strategy {
        Strategy::NoHack => 0.0,
        Strategy::Minimum => minimum,
        Strategy::Threshold => {
            minimum - head * norm_cdf(h / c - sqrt(4.0 - 2.0 * SQRT2) * inv_upper(alpha))
        }
    })
}
