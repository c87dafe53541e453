//! Gamma-family special functions and the χ² and binomial tails.

use libm::{exp, lgamma, log, log1p};

use crate::error::{domain, Result};

/// Digamma function for `x > 0`.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    acc + log(x) - 0.5 / x
        - r * (1.0 / 12.0
            - r * (1.0 / 120.0 - r * (1.0 / 252.0 - r * (1.0 / 240.0 - r * (1.0 / 132.0)))))
}

/// Trigamma function for `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    acc + 1.0 / x
        + r / 2.0
        + (1.0 / x)
            * r
            * (1.0 / 6.0 - r * (1.0 / 30.0 - r * (1.0 / 42.0 - r * (1.0 / 30.0 - r * 5.0 / 66.0))))
}

const EPS: f64 = 1e-16;

fn lower_series(a: f64, x: f64) -> f64 {
    let mut sum = 1.0 / a;
    let mut term = sum;
    let mut n = a;
    for _ in 0..10_000 {
        n += 1.0;
        term *= x / n;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * exp(-x + a * log(x) - lgamma(a))
}

fn upper_fraction(a: f64, x: f64) -> f64 {
    // Modified Lentz.
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    exp(-x + a * log(x) - lgamma(a)) * h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        lower_series(a, x)
    } else {
        1.0 - upper_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - lower_series(a, x)
    } else {
        upper_fraction(a, x)
    }
}

/// Upper tail of the χ² distribution with `dof` degrees of freedom.
pub fn chi2_sf(x: f64, dof: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    gamma_q(0.5 * dof, 0.5 * x)
}

/// Quantile of the χ² distribution.
pub fn chi2_quantile(prob: f64, dof: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(domain("chi-squared probability", prob));
    }
    if !(dof > 0.0) {
        return Err(domain("chi-squared degrees of freedom", dof));
    }
    let (mut lo, mut hi) = (0.0, dof.max(1.0));
    while gamma_p(0.5 * dof, 0.5 * hi) < prob {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_p(0.5 * dof, 0.5 * mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn ln_choose(n: u64, k: u64) -> f64 {
    lgamma(n as f64 + 1.0) - lgamma(k as f64 + 1.0) - lgamma((n - k) as f64 + 1.0)
}

/// `P(Bin(n, p) ≥ k)`.
pub fn binomial_sf(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let (lp, lq) = (log(p), log1p(-p));
    let mut s = 0.0;
    for j in k..=n {
        s += exp(ln_choose(n, j) + j as f64 * lp + (n - j) as f64 * lq);
    }
    s.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digamma_values() {
        let euler = 0.577_215_664_901_532_9;
        assert!((digamma(1.0) + euler).abs() < 1e-14);
        assert!((digamma(0.5) + euler + 2.0 * log(2.0)).abs() < 1e-14);
        let pi2 = core::f64::consts::PI * core::f64::consts::PI;
        assert!((trigamma(1.0) - pi2 / 6.0).abs() < 1e-13);
        assert!((trigamma(0.5) - pi2 / 2.0).abs() < 1e-13);
        // recurrence at a non-special point
        let x = 3.7;
        assert!((digamma(x + 1.0) - digamma(x) - 1.0 / x).abs() < 1e-14);
        assert!((trigamma(x) - trigamma(x + 1.0) - 1.0 / (x * x)).abs() < 1e-14);
    }

    #[test]
    fn chi2_tails() {
        assert!((chi2_sf(2.0, 2.0) - exp(-1.0)).abs() < 1e-15);
        assert!((chi2_quantile(0.95, 1.0).unwrap() - 3.841_458_820_694_124).abs() < 1e-9);
        assert!((chi2_quantile(0.95, 10.0).unwrap() - 18.307_038_053_275_146).abs() < 1e-9);
        // χ²_4 survival: e^{−x/2}(1 + x/2)
        for &x in &[0.3, 4.0, 25.0, 90.0] {
            let want = exp(-x / 2.0) * (1.0 + x / 2.0);
            assert!((chi2_sf(x, 4.0) / want - 1.0).abs() < 1e-12);
        }
        assert!((gamma_p(3.3, 2.1) + gamma_q(3.3, 2.1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binomial_tail() {
        assert!((binomial_sf(7, 10, 0.5) - 176.0 / 1024.0).abs() < 1e-14);
        assert_eq!(binomial_sf(0, 10, 0.5), 1.0);
        assert_eq!(binomial_sf(11, 10, 0.5), 0.0);
    }
}
