use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::numkit::{inv_upper, norm_pdf, norm_sf, Quadrature};

const Z_CAP: f64 = 37.0;

/// `J+1` equidistant breakpoints on `[lower, upper]`.
pub fn equal_partition(lower: f64, upper: f64, bins: usize) -> Vec<f64> {
    (0..=bins)
        .map(|j| {
            if j == bins {
                upper
            } else {
                lower + (upper - lower) * j as f64 / bins as f64
            }
        })
        .collect()
}

/// Bin masses `π_j = ∫_{x_{j−1}}^{x_j} g(p) dp`.
pub fn bin_proportions<F: FnMut(f64) -> Result<f64>>(g: F, partition: &[f64]) -> Result<Vec<f64>> {
    bin_proportions_with_breaks(g, partition, &[])
}

/// As [`bin_proportions`], splitting panels at points where `g` may jump.
///
/// The integral is taken in `z = Φ⁻¹(1−p)`, where the p-curves of normal
/// statistics are smooth Gaussian-like bumps rather than poles at zero.
pub fn bin_proportions_with_breaks<F: FnMut(f64) -> Result<f64>>(
    mut g: F,
    partition: &[f64],
    breaks: &[f64],
) -> Result<Vec<f64>> {
    if partition.len() < 2 {
        return Err(domain("partition length", partition.len() as f64));
    }
    for w in partition.windows(2) {
        if !(w[0] < w[1]) {
            return Err(domain("partition breakpoint", w[1]));
        }
    }
    if !(partition[0] >= 0.0 && partition[partition.len() - 1] <= 1.0) {
        return Err(domain("partition endpoint", partition[0]));
    }
    let quad = Quadrature::with_tol(10, 1e-10);
    let zb: Vec<f64> = breaks
        .iter()
        .filter(|&&b| b > 0.0 && b < 1.0)
        .map(|&b| inv_upper(b))
        .collect();
    let mut integrand = |z: f64| -> Result<f64> {
        let p = norm_sf(z);
        if !(p > 0.0 && p < 1.0) {
            return Ok(0.0);
        }
        let w = norm_pdf(z);
        if w == 0.0 {
            return Ok(0.0);
        }
        Ok(g(p)? * w)
    };
    partition
        .windows(2)
        .map(|w| {
            let hi = inv_upper(w[0]).min(Z_CAP);
            let lo = inv_upper(w[1]).max(-Z_CAP);
            let v = quad.integrate(&mut integrand, lo, hi, &zb)?;
            Ok(v.max(0.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::null_pcurve;

    #[test]
    fn uniform_bins() {
        let part = equal_partition(0.0, 0.15, 15);
        let pi = bin_proportions(|_| Ok(1.0), &part).unwrap();
        assert_eq!(pi.len(), 15);
        for m in pi {
            assert!((m - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn null_masses_decrease_and_sum() {
        let part = equal_partition(0.0, 1.0, 100);
        let pi = bin_proportions(|p| null_pcurve(p, 1.0), &part).unwrap();
        assert!(pi.windows(2).all(|w| w[1] < w[0]));
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        // G(x) = 1 − Φ(z₀(x) − h)
        let cdf = |x: f64| norm_sf(inv_upper(x) - 1.0);
        let window = bin_proportions(|p| null_pcurve(p, 1.0), &[0.02, 0.07, 0.15]).unwrap();
        assert!((window[0] - (cdf(0.07) - cdf(0.02))).abs() < 1e-12);
        assert!((window[1] - (cdf(0.15) - cdf(0.07))).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_partition() {
        assert!(bin_proportions(|_| Ok(1.0), &[0.1, 0.1]).is_err());
        assert!(bin_proportions(|_| Ok(1.0), &[0.1]).is_err());
    }
}
