use alloc::vec::Vec;
use libm::{exp, lgamma, log};

use super::quad::Quadrature;
use crate::error::{domain, Error, Result};

/// Distribution Π of local effects `h ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum EffectDistribution {
    PointMass { h0: f64 },
    /// Shape `alpha`, rate `beta`.
    Gamma { alpha: f64, beta: f64 },
    Empirical { sample: Vec<f64> },
}

impl EffectDistribution {
    pub fn point(h0: f64) -> Self {
        EffectDistribution::PointMass { h0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EffectDistribution::PointMass { h0 } => {
                if !(h0.is_finite() && *h0 >= 0.0) {
                    return Err(domain("point mass location", *h0));
                }
            }
            EffectDistribution::Gamma { alpha, beta } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(domain("gamma shape", *alpha));
                }
                if !(beta.is_finite() && *beta > 0.0) {
                    return Err(domain("gamma rate", *beta));
                }
            }
            EffectDistribution::Empirical { sample } => {
                if sample.is_empty() {
                    return Err(Error::Degenerate("empty effect sample"));
                }
                if let Some(&h) = sample.iter().find(|h| !(h.is_finite() && **h >= 0.0)) {
                    return Err(domain("effect sample entry", h));
                }
            }
        }
        Ok(())
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, EffectDistribution::PointMass { .. })
    }

    /// Draw one effect.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use rand_distr::Distribution;
        match self {
            EffectDistribution::PointMass { h0 } => *h0,
            EffectDistribution::Gamma { alpha, beta } => rand_distr::Gamma::new(*alpha, 1.0 / beta)
                .expect("validated gamma")
                .sample(rng),
            EffectDistribution::Empirical { sample } => sample[rng.random_range(0..sample.len())],
        }
    }
}

fn gamma_log_pdf(h: f64, alpha: f64, beta: f64) -> f64 {
    alpha * log(beta) - lgamma(alpha) + (alpha - 1.0) * log(h) - beta * h
}

/// `∫ f(h) dΠ(h)`.
pub fn mixture_integral<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    pi: &EffectDistribution,
    quad: &Quadrature,
) -> Result<f64> {
    let checked = |at: f64, v: f64| -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { at })
        }
    };
    match pi {
        EffectDistribution::PointMass { h0 } => {
            let v = f(*h0)?;
            checked(*h0, v)
        }
        EffectDistribution::Empirical { sample } => {
            let mut s = 0.0;
            for &h in sample {
                let v = f(h)?;
                s += checked(h, v)?;
            }
            Ok(s / sample.len() as f64)
        }
        EffectDistribution::Gamma { alpha, beta } => {
            let (alpha, beta) = (*alpha, *beta);
            // h = t/(1−t) maps (0, ∞) to (0, 1); t = s^k smooths the h^{α−1} pole.
            let k = libm::ceil(2.0 / alpha).max(1.0);
            let mode = ((alpha - 1.0).max(0.0) + libm::sqrt(alpha)) / beta;
            let sm = libm::pow(mode / (1.0 + mode), 1.0 / k);
            quad.integrate(
                |s| {
                    let t = libm::pow(s, k);
                    let dt = k * libm::pow(s, k - 1.0);
                    let u = 1.0 - t;
                    let h = t / u;
                    if h == 0.0 || !h.is_finite() {
                        return Ok(0.0);
                    }
                    let w = exp(gamma_log_pdf(h, alpha, beta)) * dt / (u * u);
                    if w == 0.0 {
                        return Ok(0.0);
                    }
                    let v = f(h)?;
                    Ok(checked(h, v)? * w)
                },
                0.0,
                1.0,
                &[0.5 * sm, sm, 0.5 * (1.0 + sm)],
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn quad() -> Quadrature {
        Quadrature::with_tol(10, 1e-8)
    }

    #[test]
    fn normalization_and_point_mass() {
        for pi in [
            EffectDistribution::point(0.7),
            EffectDistribution::Gamma { alpha: 0.6, beta: 1.3 },
            EffectDistribution::Gamma { alpha: 5.0, beta: 0.5 },
            EffectDistribution::Empirical { sample: alloc::vec![0.0, 1.0, 4.0] },
        ] {
            let v = mixture_integral(|_| Ok(1.0), &pi, &quad()).unwrap();
            assert!((v - 1.0).abs() < 1e-8, "{pi:?}");
        }
        let v = mixture_integral(|h| Ok(h * h), &EffectDistribution::point(1.3), &quad()).unwrap();
        assert_eq!(v, 1.3 * 1.3);
    }

    #[test]
    fn gamma_mean_against_monte_carlo() {
        let pi = EffectDistribution::Gamma { alpha: 2.0, beta: 1.0 };
        let q = quad();
        let v = mixture_integral(|h| Ok(h), &pi, &q).unwrap();
        assert!((v - 2.0).abs() <= q.abs_tol());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mc: f64 = (0..n).map(|_| pi.sample(&mut rng)).sum::<f64>() / n as f64;
        // sd of the mean is sqrt(2)/1000
        assert!((mc - v).abs() < 4.0 * 2f64.sqrt() / 1000.0);
    }

    #[test]
    fn linear_in_integrand() {
        let pi = EffectDistribution::Gamma { alpha: 1.7, beta: 0.8 };
        let q = quad();
        let f = |h: f64| libm::exp(-h) * h;
        let g = |h: f64| libm::cos(h) / (1.0 + h);
        let a = mixture_integral(|h| Ok(f(h)), &pi, &q).unwrap();
        let b = mixture_integral(|h| Ok(g(h)), &pi, &q).unwrap();
        let c = mixture_integral(|h| Ok(f(h) + g(h)), &pi, &q).unwrap();
        assert!((a + b - c).abs() < 2.0 * q.abs_tol());
    }

    #[test]
    fn reports_non_finite_node() {
        let pi = EffectDistribution::Empirical { sample: alloc::vec![1.0, 2.0] };
        let err = mixture_integral(|h| Ok(if h > 1.5 { f64::INFINITY } else { h }), &pi, &quad())
            .unwrap_err();
        assert_eq!(err, Error::NonFinite { at: 2.0 });
    }

    #[test]
    fn validation() {
        assert!(EffectDistribution::Gamma { alpha: 0.0, beta: 1.0 }.validate().is_err());
        assert!(EffectDistribution::point(-1.0).validate().is_err());
        assert!(EffectDistribution::Empirical { sample: alloc::vec![] }.validate().is_err());
        assert!(EffectDistribution::Empirical { sample: alloc::vec![f64::NAN] }.validate().is_err());
    }
}
