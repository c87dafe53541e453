use libm::sqrt;

use super::normal::{norm_cdf, norm_pdf};
use crate::error::{domain, Result};

/// `∫_L^U w φ(w) Φ(a w + b) dw` in closed form. Infinite limits allowed.
pub fn lemma1_integral(lower: f64, upper: f64, a: f64, b: f64) -> Result<f64> {
    if lower.is_nan() || upper.is_nan() || lower > upper {
        return Err(domain("lower integration limit", lower));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(domain("linear coefficient", if a.is_finite() { b } else { a }));
    }
    let edge = |w: f64| {
        if w.is_infinite() {
            0.0
        } else {
            norm_cdf(a * w + b) * norm_pdf(w)
        }
    };
    let s = sqrt(1.0 + a * a);
    let shift = a * b / s;
    Ok(edge(lower) - edge(upper)
        + a / s * norm_pdf(b / s) * (norm_cdf(s * upper + shift) - norm_cdf(s * lower + shift)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Quadrature;

    #[test]
    fn special_cases() {
        let v = lemma1_integral(-0.4, 1.1, 0.0, 0.3).unwrap();
        assert!((v - norm_cdf(0.3) * (norm_pdf(-0.4) - norm_pdf(1.1))).abs() < 1e-15);
        let v = lemma1_integral(f64::NEG_INFINITY, f64::INFINITY, 0.0, 0.0).unwrap();
        assert!(v.abs() < 1e-15);
        assert!(lemma1_integral(1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn matches_quadrature() {
        let q = Quadrature::with_tol(12, 1e-13);
        let (l, u, a, b) = (-1.0, 2.0, 0.7, -0.3);
        let num = q
            .integrate(|w| Ok(w * norm_pdf(w) * norm_cdf(a * w + b)), l, u, &[])
            .unwrap();
        assert!((lemma1_integral(l, u, a, b).unwrap() - num).abs() < 1e-8);
    }
}
