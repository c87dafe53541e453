use libm::{log, sqrt};

use super::special::{digamma, trigamma};
use crate::error::{domain, Error, Result};

/// Maximum likelihood `(shape, rate)` of a Gamma sample.
///
/// Newton on `ln α − ψ(α) = ln x̄ − mean(ln x)`, then `β = α / x̄`.
pub fn fit_gamma_mle(sample: &[f64]) -> Result<(f64, f64)> {
    if sample.len() < 2 {
        return Err(Error::Insufficient("gamma fit needs at least two observations"));
    }
    if let Some(&x) = sample.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(domain("gamma sample entry", x));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let mean_log = sample.iter().map(|&x| log(x)).sum::<f64>() / n;
    let s = log(mean) - mean_log;
    if !(s > 1e-14) {
        return Err(Error::Degenerate("constant gamma sample"));
    }
    let mut a = (3.0 - s + sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
    for _ in 0..100 {
        let score = log(a) - digamma(a) - s;
        let slope = 1.0 / a - trigamma(a);
        let step = score / slope;
        let next = a - step;
        a = if next > 0.0 { next } else { 0.5 * a };
        if step.abs() <= 1e-15 * a {
            break;
        }
    }
    Ok((a, a / mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_distr::Distribution;

    fn draw(shape: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = rand_distr::Gamma::new(shape, 1.0).unwrap();
        (0..n).map(|_| g.sample(&mut rng)).collect()
    }

    #[test]
    fn recovers_shape() {
        let x = draw(2.0, 100_000, 5);
        let (a, b) = fit_gamma_mle(&x).unwrap();
        assert!((a - 2.0).abs() < 0.05);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!((b * mean - a).abs() <= 1e-12 * a);
        // Score equations.
        let n = x.len() as f64;
        let mean_log = x.iter().map(|&v| log(v)).sum::<f64>() / n;
        assert!((log(b) - digamma(a) + mean_log).abs() < 1e-8);
        assert!((a / b - mean).abs() < 1e-8);
    }

    #[test]
    fn exponential_data() {
        let x = draw(1.0, 20_000, 9);
        let (a, _) = fit_gamma_mle(&x).unwrap();
        // Asymptotic sd of α̂ at α = 1 is 1/sqrt(n(ψ'(1) − 1)).
        let sd = 1.0 / sqrt(x.len() as f64 * (trigamma(1.0) - 1.0));
        assert!((a - 1.0).abs() < 3.0 * sd);
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_gamma_mle(&[2.0, 2.0, 2.0]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_gamma_mle(&[1.0, -1.0]), Err(Error::Domain { .. })));
        assert!(fit_gamma_mle(&[1.0]).is_err());
    }
}
