//! Publication selection and mixtures of honest and p-hacking researchers.

use alloc::vec::Vec;
use libm::exp;
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::rng::{stream, Purpose};

/// Probability that a result with p-value `p` gets published.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum SelectionRule {
    #[default]
    None,
    /// Significant results are always published, others with
    /// probability `insignif_prob`.
    Sharp { cutoff: f64, insignif_prob: f64 },
    /// `exp(−decay·p)`.
    Smooth { decay: f64 },
}

impl SelectionRule {
    pub fn sharp() -> Self {
        SelectionRule::Sharp {
            cutoff: 0.05,
            insignif_prob: 0.1,
        }
    }

    pub fn smooth() -> Self {
        SelectionRule::Smooth { decay: 8.45 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionRule::None => Ok(()),
            SelectionRule::Sharp { cutoff, insignif_prob } => {
                if !(cutoff > 0.0 && cutoff < 1.0) {
                    return Err(domain("sharp cutoff", cutoff));
                }
                if !(insignif_prob > 0.0 && insignif_prob <= 1.0) {
                    return Err(domain("insignificant publication probability", insignif_prob));
                }
                Ok(())
            }
            SelectionRule::Smooth { decay } => {
                if !(decay > 0.0 && decay.is_finite()) {
                    return Err(domain("smooth decay", decay));
                }
                Ok(())
            }
        }
    }
}

pub fn selection_prob(p: f64, rule: &SelectionRule) -> f64 {
    match *rule {
        SelectionRule::None => 1.0,
        SelectionRule::Sharp { cutoff, insignif_prob } => {
            if p <= cutoff {
                1.0
            } else {
                insignif_prob
            }
        }
        SelectionRule::Smooth { decay } => exp(-decay * p),
    }
}

/// `∫_0^c S(p) dp / ∫_c^1 S(p) dp` for a uniform p-curve. Two rules with
/// equal ratios select significant results equally strongly.
pub fn publication_mass_ratio(rule: &SelectionRule, cutoff: f64) -> Result<f64> {
    rule.validate()?;
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(domain("cutoff", cutoff));
    }
    let (lo, hi) = match *rule {
        SelectionRule::None => (cutoff, 1.0 - cutoff),
        SelectionRule::Sharp { cutoff: c, insignif_prob: q } => {
            let m = |a: f64, b: f64| (b.min(c) - a).max(0.0) + q * (b - a.max(c)).max(0.0);
            (m(0.0, cutoff), m(cutoff, 1.0))
        }
        SelectionRule::Smooth { decay: a } => ((1.0 - exp(-a * cutoff)) / a, (exp(-a * cutoff) - exp(-a)) / a),
    };
    Ok(lo / hi)
}

/// Published p-values from one simulated literature.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSample {
    pub pvalues: Vec<f64>,
    pub n_requested: usize,
    pub n_kept: usize,
    pub tau: f64,
    pub rule: SelectionRule,
    pub seed: u64,
}

/// Draw `n` studies, each p-hacked with probability `tau`, resampling from
/// the pools, and keep each with its publication probability. Thinned draws
/// are not replaced.
pub fn draw_observed_with<R: Rng + ?Sized>(
    pool_hacked: &[f64],
    pool_nohack: &[f64],
    tau: f64,
    n: usize,
    rule: &SelectionRule,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if pool_hacked.is_empty() || pool_nohack.is_empty() {
        return Err(Error::Insufficient("empty p-value pool"));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(domain("tau", tau));
    }
    if n == 0 {
        return Err(domain("sample size", 0.0));
    }
    rule.validate()?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let pool = if rng.random::<f64>() < tau { pool_hacked } else { pool_nohack };
        let p = pool[rng.random_range(0..pool.len())];
        let keep = match rule {
            SelectionRule::None => true,
            _ => rng.random::<f64>() < selection_prob(p, rule),
        };
        if keep {
            out.push(p);
        }
    }
    Ok(out)
}

pub fn draw_observed(
    pool_hacked: &[f64],
    pool_nohack: &[f64],
    tau: f64,
    n: usize,
    rule: &SelectionRule,
    seed: u64,
) -> Result<ObservedSample> {
    let mut rng = stream(seed, Purpose::Observed, 0);
    let pvalues = draw_observed_with(pool_hacked, pool_nohack, tau, n, rule, &mut rng)?;
    Ok(ObservedSample {
        n_kept: pvalues.len(),
        pvalues,
        n_requested: n,
        tau,
        rule: *rule,
        seed,
    })
}
