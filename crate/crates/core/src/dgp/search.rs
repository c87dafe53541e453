use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{CovariateSearch, Design, DgpConfig, DgpScenario};
use super::estimators::{autocov_sums, bartlett_sum, bic_lag_select, cluster_se, pvalue, FitResult, Gram, IvGram};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, forward};

/// Stopping rule of the specification search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum SearchStrategy {
    /// Start from the largest specification and move down in size.
    #[cfg_attr(feature = "serde", serde(rename = "threshold_g2s"))]
    ThresholdG2S,
    /// Start from the smallest specification and move up in size.
    #[cfg_attr(feature = "serde", serde(rename = "threshold_s2g"))]
    ThresholdS2G,
    Minimum,
}

impl SearchStrategy {
    pub fn is_threshold(self) -> bool {
        self != SearchStrategy::Minimum
    }
}

/// One simulated study.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoolEntry {
    pub p_nohack: f64,
    pub p_hacked: f64,
    pub beta_reported: f64,
    pub n_specs_tried: u32,
}

/// Run a tiered search. The first fitted specification in `tiers` order is
/// the honest one. Specifications whose fit fails are skipped; `None` means
/// nothing could be fitted.
pub fn tiered_search<F>(tiers: &[Vec<u32>], threshold: bool, alpha: f64, mut fit: F) -> Option<PoolEntry>
where
    F: FnMut(u32) -> Result<FitResult>,
{
    let mut first: Option<FitResult> = None;
    let mut best: Option<FitResult> = None;
    let mut tried = 0u32;
    for tier in tiers {
        let mut rep: Option<FitResult> = None;
        for &spec in tier {
            let Ok(r) = fit(spec) else { continue };
            tried += 1;
            first.get_or_insert(r);
            if rep.is_none_or(|b| r.pvalue < b.pvalue) {
                rep = Some(r);
            }
        }
        let Some(rep) = rep else { continue };
        if best.is_none_or(|b| rep.pvalue < b.pvalue) {
            best = Some(rep);
        }
        if threshold && rep.pvalue <= alpha {
            best = Some(rep);
            break;
        }
    }
    let (first, best) = (first?, best?);
    Some(PoolEntry {
        p_nohack: first.pvalue,
        p_hacked: best.pvalue,
        beta_reported: best.beta_hat,
        n_specs_tried: tried,
    })
}

/// Subsets of `k` items grouped by size, largest first.
pub fn subset_tiers(k: usize, include_empty: bool) -> Vec<Vec<u32>> {
    let lo = if include_empty { 0 } else { 1 };
    (lo..=k)
        .rev()
        .map(|size| (0u32..1 << k).filter(|m| m.count_ones() as usize == size).collect())
        .collect()
}

fn n01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn normals<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| n01(rng)).collect()
}

/// Linearly recombine the columns so that their second-moment matrix
/// `DᵀD/N` equals `target` exactly.
fn impose_moments(cols: &mut [&mut Vec<f64>], target: &[f64]) -> Result<()> {
    let m = cols.len();
    let n = cols[0].len();
    let mut g = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            g[i * m + j] = cols[i].iter().zip(cols[j].iter()).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        }
    }
    let mut s = target.to_vec();
    cholesky(&mut g, m, 1e-12)?;
    cholesky(&mut s, m, 1e-12)?;
    // new row d' = L_S L_G⁻¹ d for each observation
    let mut d = vec![0.0; m];
    for t in 0..n {
        for i in 0..m {
            d[i] = cols[i][t];
        }
        forward(&g, m, &mut d);
        for i in 0..m {
            cols[i][t] = (0..=i).map(|j| s[i * m + j] * d[j]).sum();
        }
    }
    Ok(())
}

/// Simulate one study and run the search on it.
pub fn run_strategy<R: Rng + ?Sized>(
    cfg: &DgpConfig,
    strategy: SearchStrategy,
    design: &Design,
    rng: &mut R,
) -> Result<Option<PoolEntry>> {
    let threshold = strategy.is_threshold();
    if strategy == SearchStrategy::ThresholdS2G && cfg.scenario != DgpScenario::Covariate {
        return Err(Error::Config("specific-to-general search applies to covariate selection only".into()));
    }
    let n = cfg.n_obs;
    let h = cfg.effect.sample(rng);
    let beta = cfg.beta_scale * h / sqrt(n as f64);
    let entry = match cfg.scenario {
        DgpScenario::Covariate => {
            let mut x = normals(rng, n);
            let mut zs: Vec<Vec<f64>> = design
                .gammas
                .iter()
                .map(|&g| {
                    let s = sqrt(1.0 - g * g);
                    x.iter().map(|&x| g * x + s * n01(rng)).collect()
                })
                .collect();
            if let CovariateSearch::OneAtATime { gamma } = cfg.covariate_search {
                let g2 = gamma * gamma;
                let target = [1.0, gamma, gamma, gamma, 1.0, g2, gamma, g2, 1.0];
                let (a, rest) = zs.split_at_mut(1);
                impose_moments(&mut [&mut x, &mut a[0], &mut rest[0]], &target)?;
            }
            let y: Vec<f64> = x.iter().map(|&x| x * beta + n01(rng)).collect();
            let mut cols: Vec<&[f64]> = vec![&x];
            cols.extend(zs.iter().map(|z| z.as_slice()));
            let g = Gram::new(&cols, &y);
            let fit = |mask: u32| {
                let mut idx = vec![0usize];
                idx.extend((0..zs.len()).filter(|j| mask >> j & 1 == 1).map(|j| j + 1));
                g.ols(&idx, mask, cfg.sided)
            };
            let mut tiers = match cfg.covariate_search {
                CovariateSearch::OneAtATime { .. } => vec![vec![1], vec![2]],
                CovariateSearch::AllSubsets => subset_tiers(cfg.k, true),
            };
            if strategy == SearchStrategy::ThresholdS2G {
                tiers.reverse();
            }
            tiered_search(&tiers, threshold, cfg.alpha, fit)
        }
        DgpScenario::Iv => {
            let xi = normals(rng, n);
            let zs: Vec<Vec<f64>> = design
                .gammas
                .iter()
                .map(|&g| {
                    let s = sqrt(1.0 - g * g);
                    xi.iter().map(|&c| g * c + s * n01(rng)).collect()
                })
                .collect();
            let c = cfg.endog_cov;
            let s = sqrt(1.0 - c * c);
            let mut x = vec![0.0; n];
            let mut y = vec![0.0; n];
            for i in 0..n {
                let u = n01(rng);
                let e = n01(rng);
                let xi_ = zs.iter().zip(&design.pis).map(|(z, p)| p * z[i]).sum::<f64>() + c * u + s * e;
                x[i] = xi_;
                y[i] = xi_ * beta + u;
            }
            let cols: Vec<&[f64]> = zs.iter().map(|z| z.as_slice()).collect();
            let g = IvGram::new(&cols, &x, &y);
            let fit = |mask: u32| {
                let idx: Vec<usize> = (0..cfg.k).filter(|j| mask >> j & 1 == 1).collect();
                let r = g.fit(&idx, mask, cfg.sided)?;
                match (cfg.f_screen, r.fstat_first_stage) {
                    (Some(min), Some(f)) if f < min => Err(Error::Degenerate("weak first stage screened out")),
                    _ => Ok(r),
                }
            };
            tiered_search(&subset_tiers(cfg.k, false), threshold, cfg.alpha, fit)
        }
        DgpScenario::LagLength | DgpScenario::Cluster => {
            let x = normals(rng, n);
            let y: Vec<f64> = x.iter().map(|&x| x * beta + n01(rng)).collect();
            let sxx: f64 = x.iter().map(|v| v * v).sum();
            let b = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / sxx;
            let resid: Vec<f64> = x.iter().zip(&y).map(|(x, y)| y - b * x).collect();
            let finish = |se: f64, id: u32| {
                if !(se > 0.0 && se.is_finite()) {
                    return Err(Error::Singular("non-positive variance estimate"));
                }
                let t = b / se;
                Ok(FitResult {
                    beta_hat: b,
                    se,
                    tstat: t,
                    pvalue: pvalue(t, cfg.sided),
                    spec_id: id,
                    fstat_first_stage: None,
                })
            };
            if cfg.scenario == DgpScenario::LagLength {
                let top = cfg.max_lags + cfg.extra_lags;
                let v: Vec<f64> = resid.iter().zip(&x).map(|(u, x)| u * x).collect();
                let gam = autocov_sums(&v, top);
                let fit = |l: u32| finish(sqrt(bartlett_sum(&gam, l as usize).max(0.0)) / sxx, l);
                let tiers: Vec<Vec<u32>> = if threshold {
                    let l0 = bic_lag_select(&resid, cfg.max_lags);
                    (l0..=l0 + cfg.extra_lags).map(|l| vec![l as u32]).collect()
                } else {
                    let l0 = bic_lag_select(&resid, cfg.max_lags) as u32;
                    let mut t = vec![vec![l0]];
                    t.push((0..=cfg.max_lags as u32).filter(|&l| l != l0).collect());
                    t
                };
                tiered_search(&tiers, threshold, cfg.alpha, fit)
            } else {
                let fit = |g: u32| finish(cluster_se(&resid, &x, g as usize)?, g);
                let tiers: Vec<Vec<u32>> = cfg.cluster_sequence().into_iter().map(|g| vec![g as u32]).collect();
                tiered_search(&tiers, threshold, cfg.alpha, fit)
            }
        }
    };
    Ok(entry)
}
