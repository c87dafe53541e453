use alloc::vec;
use alloc::vec::Vec;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::analytic::{bin_proportions_with_breaks, g_cov, PCurveModel, Scenario, Sided, Strategy};
use crate::linalg::{chol_solve, cholesky};
use crate::numkit::{norm_sf, EffectDistribution};
use crate::rng::{stream, Purpose};

fn fake(p: f64) -> Result<FitResult, crate::Error> {
    Ok(FitResult {
        beta_hat: p,
        se: 1.0,
        tstat: 0.0,
        pvalue: p,
        spec_id: 0,
        fstat_first_stage: None,
    })
}

#[test]
fn subset_tiers_by_size() {
    let t = subset_tiers(3, true);
    assert_eq!(t.len(), 4);
    assert_eq!(t[0], vec![7]);
    assert_eq!(t[1], vec![3, 5, 6]);
    assert_eq!(t[3], vec![0]);
    assert_eq!(subset_tiers(2, false), vec![vec![3], vec![1, 2]]);
}

#[test]
fn tiered_search_rules() {
    let ps = [0.2, 0.07, 0.03, 0.5, 0.01];
    let tiers = vec![vec![0], vec![1, 2], vec![3, 4]];
    let t = tiered_search(&tiers, true, 0.05, |i| fake(ps[i as usize])).unwrap();
    assert_eq!((t.p_nohack, t.p_hacked, t.n_specs_tried), (0.2, 0.03, 3));
    let m = tiered_search(&tiers, false, 0.05, |i| fake(ps[i as usize])).unwrap();
    assert_eq!((m.p_hacked, m.n_specs_tried), (0.01, 5));
    // significant start is reported as is
    let t = tiered_search(&tiers, true, 0.25, |i| fake(ps[i as usize])).unwrap();
    assert_eq!((t.p_nohack, t.p_hacked), (0.2, 0.2));
    // exhausted search reports the overall minimum
    let ps = [0.2, 0.3, 0.1, 0.5, 0.4];
    let t = tiered_search(&tiers, true, 0.05, |i| fake(ps[i as usize])).unwrap();
    assert_eq!(t.p_hacked, 0.1);
    // skipped specifications
    let t = tiered_search(&tiers, true, 0.05, |i| {
        if i == 0 {
            Err(crate::Error::Singular("x"))
        } else {
            fake(ps[i as usize])
        }
    })
    .unwrap();
    assert_eq!(t.p_nohack, 0.3);
    assert!(tiered_search(&tiers, true, 0.05, |_| Err(crate::Error::Singular("x"))).is_none());
}

fn configs() -> Vec<DgpConfig> {
    let mut v = vec![
        DgpConfig::new(DgpScenario::Covariate),
        DgpConfig::new(DgpScenario::Iv),
        DgpConfig::new(DgpScenario::Iv).with_f_screen(Some(10.0)),
        DgpConfig::new(DgpScenario::LagLength),
        DgpConfig::new(DgpScenario::Cluster),
        DgpConfig::covariate_pair(0.5).with_sided(Sided::One),
    ];
    for c in v.iter_mut() {
        c.effect = EffectDistribution::point(1.0);
    }
    v
}

#[test]
fn strategy_invariants() {
    for cfg in configs() {
        cfg.validate().unwrap();
        let mut strategies = vec![SearchStrategy::ThresholdG2S, SearchStrategy::Minimum];
        if cfg.scenario == DgpScenario::Covariate {
            strategies.push(SearchStrategy::ThresholdS2G);
        }
        for s in strategies {
            let pool = simulate_pool(&cfg, s, 2000, 11).unwrap();
            assert!(pool.len() + pool.dropped as usize == 2000);
            for e in &pool.entries {
                assert!(e.p_hacked > 0.0 && e.p_hacked <= 1.0);
                assert!(e.p_hacked <= e.p_nohack, "{:?} {:?}", cfg.scenario, s);
                if s.is_threshold() && e.p_nohack <= cfg.alpha && cfg.f_screen.is_none() {
                    assert_eq!(e.p_hacked, e.p_nohack);
                }
            }
        }
    }
}

#[test]
fn s2g_is_rejected_outside_covariates() {
    let cfg = DgpConfig::new(DgpScenario::Cluster);
    assert!(simulate_pool(&cfg, SearchStrategy::ThresholdS2G, 10, 1).is_err());
}

#[test]
fn invalid_configs() {
    let mut c = DgpConfig::new(DgpScenario::Cluster);
    c.cluster_levels = vec![30];
    assert!(c.validate().is_err());
    let c = DgpConfig::new(DgpScenario::Covariate).with_k(0);
    assert!(c.validate().is_err());
    let mut c = DgpConfig::new(DgpScenario::Covariate);
    c.n_obs = 4;
    assert!(c.validate().is_err());
    assert!(simulate_pool(&DgpConfig::new(DgpScenario::Iv), SearchStrategy::Minimum, 0, 1).is_err());
}

#[test]
fn pools_are_reproducible() {
    let cfg = DgpConfig::new(DgpScenario::Iv);
    let a = simulate_pool(&cfg, SearchStrategy::ThresholdG2S, 300, 5).unwrap();
    let b = simulate_pool(&cfg, SearchStrategy::ThresholdG2S, 300, 5).unwrap();
    assert_eq!(a, b);
    let e = replication(&cfg, SearchStrategy::ThresholdG2S, 5, 123, None).unwrap();
    assert_eq!(e.as_ref(), a.entries.get(123));
    let c = simulate_pool(&cfg, SearchStrategy::ThresholdG2S, 300, 6).unwrap();
    assert_ne!(a.entries, c.entries);
}

#[test]
fn shared_design_is_fixed() {
    let mut cfg = DgpConfig::new(DgpScenario::Covariate);
    cfg.redraw_design = false;
    let d = shared_design(&cfg, 3).unwrap();
    assert_eq!(d, shared_design(&cfg, 3).unwrap());
    assert_eq!(d.gammas.len(), 3);
    assert!(d.gammas.iter().all(|g| g.abs() <= 0.8));
    assert!(shared_design(&DgpConfig::new(DgpScenario::Covariate), 3).is_none());
}

fn ks_uniform(mut ps: Vec<f64>) -> f64 {
    ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = ps.len() as f64;
    ps.iter()
        .enumerate()
        .map(|(i, &p)| (p - i as f64 / n).abs().max(((i + 1) as f64 / n - p).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn honest_pvalues_uniform_under_null() {
    let reps = 20_000;
    let pool = simulate_pool(&DgpConfig::new(DgpScenario::Covariate), SearchStrategy::Minimum, reps, 8).unwrap();
    let d = ks_uniform(pool.nohack());
    assert!(d < 1.628 / (reps as f64).sqrt(), "{d}");
    // CR0 with 20 clusters and a normal reference over-rejects.
    let pool = simulate_pool(&DgpConfig::new(DgpScenario::Cluster), SearchStrategy::Minimum, reps, 8).unwrap();
    let r = pool.entries.iter().filter(|e| e.p_nohack <= 0.05).count() as f64 / reps as f64;
    assert!(r > 0.05 && r < 0.09, "{r}");
}

#[test]
fn minimum_dominates_honest() {
    let cfg = DgpConfig::new(DgpScenario::LagLength);
    let pool = simulate_pool(&cfg, SearchStrategy::Minimum, 5000, 4).unwrap();
    let (h, n) = (pool.hacked(), pool.nohack());
    for i in 1..100 {
        let x = i as f64 / 100.0;
        let fh = h.iter().filter(|&&p| p <= x).count();
        let fnh = n.iter().filter(|&&p| p <= x).count();
        assert!(fh >= fnh);
    }
}

#[test]
fn one_sided_minimum_biases_estimates_up() {
    let cfg = DgpConfig::new(DgpScenario::Covariate).with_sided(Sided::One);
    let pool = simulate_pool(&cfg, SearchStrategy::Minimum, 20_000, 9).unwrap();
    let m = pool.entries.iter().map(|e| e.beta_reported).sum::<f64>() / pool.len() as f64;
    let sd = 1.0 / (200f64).sqrt() / (20_000f64).sqrt();
    assert!(m > 5.0 * sd, "{m}");
}

/// Minimum over the 2^K covariate specifications from the large-sample joint
/// normal law of their t-statistics at h = 0.
fn joint_normal_minimum_size(k: usize, reps: usize, seed: u64) -> f64 {
    let mut rng = stream(seed, Purpose::Oracle, 0);
    let specs = 1usize << k;
    let mut hits = 0;
    for _ in 0..reps {
        let g: Vec<f64> = (0..k).map(|_| rand::Rng::random_range(&mut rng, -0.8..0.8)).collect();
        // x residual after projecting on Z_S, as loadings on (x, z_1..z_k).
        let cov = |i: usize, j: usize| -> f64 {
            match (i, j) {
                (0, 0) => 1.0,
                (0, j) | (j, 0) => g[j - 1],
                (i, j) if i == j => 1.0,
                (i, j) => g[i - 1] * g[j - 1],
            }
        };
        let loads: Vec<Vec<f64>> = (0..specs)
            .map(|mask| {
                let idx: Vec<usize> = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| j + 1).collect();
                let m = idx.len();
                let mut w = vec![0.0; k + 1];
                w[0] = 1.0;
                if m > 0 {
                    let mut a = vec![0.0; m * m];
                    for r in 0..m {
                        for c in 0..m {
                            a[r * m + c] = cov(idx[r], idx[c]);
                        }
                    }
                    cholesky(&mut a, m, 1e-14).unwrap();
                    let mut b: Vec<f64> = idx.iter().map(|&i| cov(i, 0)).collect();
                    chol_solve(&a, m, &mut b);
                    for (r, &i) in idx.iter().enumerate() {
                        w[i] -= b[r];
                    }
                }
                w
            })
            .collect();
        let quad = |a: &[f64], b: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..=k {
                for j in 0..=k {
                    s += a[i] * b[j] * cov(i, j);
                }
            }
            s
        };
        let mut corr = vec![0.0; specs * specs];
        for i in 0..specs {
            for j in 0..specs {
                corr[i * specs + j] =
                    quad(&loads[i], &loads[j]) / (quad(&loads[i], &loads[i]) * quad(&loads[j], &loads[j])).sqrt();
            }
        }
        for i in 0..specs {
            corr[i * specs + i] += 1e-12;
        }
        cholesky(&mut corr, specs, 1e-15).unwrap();
        let e: Vec<f64> = (0..specs).map(|_| StandardNormal.sample(&mut rng)).collect();
        let min_p = (0..specs)
            .map(|i| {
                let t: f64 = (0..=i).map(|j| corr[i * specs + j] * e[j]).sum();
                2.0 * norm_sf(t.abs())
            })
            .fold(1.0, f64::min);
        if min_p <= 0.05 {
            hits += 1;
        }
    }
    hits as f64 / reps as f64
}

#[test]
fn covariate_minimum_size_matches_joint_normal() {
    let reps = 40_000;
    let oracle = joint_normal_minimum_size(3, reps, 21);
    let cfg = DgpConfig::new(DgpScenario::Covariate);
    let pool = simulate_pool(&cfg, SearchStrategy::Minimum, reps as u64, 22).unwrap();
    let sim = pool.entries.iter().filter(|e| e.p_hacked <= 0.05).count() as f64 / pool.len() as f64;
    let se = (2.0 * oracle * (1.0 - oracle) / reps as f64).sqrt();
    assert!(oracle > 0.06, "{oracle}");
    // finite-N variance estimation adds a small liberal bias
    assert!((sim - oracle).abs() < 3.0 * se + 0.004, "sim {sim} oracle {oracle}");
}

#[test]
fn covariate_pair_matches_analytic_threshold_curve() {
    let gamma: f64 = 0.5;
    let reps = 200_000u64;
    for h in [0.0, 1.0] {
        let cfg = DgpConfig::covariate_pair(gamma)
            .with_sided(Sided::One)
            .with_effect(EffectDistribution::point(h));
        let pool = simulate_pool(&cfg, SearchStrategy::ThresholdG2S, reps, 30).unwrap();
        let model = PCurveModel::new(Scenario::CovariateSelection, Strategy::Threshold, EffectDistribution::point(h))
            .with_rho(1.0 - gamma * gamma);
        let edges: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let mass = bin_proportions_with_breaks(|p| g_cov(p, &model), &edges, &[0.05]).unwrap();
        let mut within = 0;
        for j in 0..20 {
            let cnt = pool.entries.iter().filter(|e| e.p_hacked > edges[j] && e.p_hacked <= edges[j + 1]).count();
            let f = cnt as f64 / reps as f64;
            let se = (mass[j] * (1.0 - mass[j]) / reps as f64).sqrt();
            if (f - mass[j]).abs() <= 3.0 * se {
                within += 1;
            } else {
                std::eprintln!("h={h} bin {j}: sim {f} analytic {} se {se}", mass[j]);
            }
        }
        assert!(within >= 19, "h={h}: {within}/20 bins within 3 se");
    }
}

#[test]
fn strong_iv_test_has_size() {
    let reps = 10_000;
    let mut rej = 0;
    for i in 0..reps {
        let mut rng = stream(40, Purpose::Oracle, i);
        let n = 200;
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for t in 0..n {
            let u: f64 = StandardNormal.sample(&mut rng);
            let e: f64 = StandardNormal.sample(&mut rng);
            x[t] = 2.0 * z[t] + 0.5 * u + 0.75f64.sqrt() * e;
            y[t] = u;
        }
        if iv_2sls_fit(&y, &x, &[&z], Sided::Two).unwrap().pvalue <= 0.05 {
            rej += 1;
        }
    }
    let r = rej as f64 / reps as f64;
    assert!((r - 0.05).abs() <= 0.01, "{r}");
}

#[test]
fn fifty_cluster_test_has_size() {
    let reps = 10_000;
    let mut rej = 0;
    for i in 0..reps {
        let mut rng = stream(41, Purpose::Oracle, i);
        let x: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let b = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / sxx;
        let u: Vec<f64> = x.iter().zip(&y).map(|(x, y)| y - b * x).collect();
        if pvalue(b / cluster_se(&u, &x, 50).unwrap(), Sided::Two) <= 0.05 {
            rej += 1;
        }
    }
    let r = rej as f64 / reps as f64;
    assert!((r - 0.05).abs() <= 0.015, "{r}");
}

fn ar1(rng: &mut impl rand::Rng, n: usize, phi: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    let mut prev: f64 = StandardNormal.sample(&mut *rng);
    prev /= (1.0 - phi * phi).sqrt();
    for x in v.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut *rng);
        prev = phi * prev + e;
        *x = prev;
    }
    v
}

#[test]
fn hac_exceeds_iid_under_autocorrelation() {
    let reps = 10_000;
    let mut bigger = 0;
    for i in 0..reps {
        let mut rng = stream(42, Purpose::Oracle, i);
        // location model: the regressor is a constant
        let x = vec![1.0; 200];
        let u = ar1(&mut rng, 200, 0.5);
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let s2: f64 = u.iter().map(|v| v * v).sum::<f64>() / 200.0;
        let iid = (s2 / sxx).sqrt();
        if newey_west_se(&u, &x, 4).unwrap() > iid {
            bigger += 1;
        }
    }
    assert!(bigger as f64 >= 0.99 * reps as f64, "{bigger}");
}

#[test]
fn lag_one_ratio_slightly_below_one_for_iid() {
    let reps = 20_000;
    let mut sum = 0.0;
    for i in 0..reps {
        let mut rng = stream(43, Purpose::Oracle, i);
        let x: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let b = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / sxx;
        let u: Vec<f64> = x.iter().zip(&y).map(|(x, y)| y - b * x).collect();
        let r = newey_west_se(&u, &x, 1).unwrap() / newey_west_se(&u, &x, 0).unwrap();
        sum += r * r;
    }
    let m = sum / reps as f64;
    assert!(m < 1.0 && m > 0.98, "{m}");
}
