use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;

use crate::analytic::Sided;
use crate::error::{Error, Result};
use crate::numkit::EffectDistribution;

/// Which specification search the simulated researchers run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum DgpScenario {
    Covariate,
    Iv,
    LagLength,
    Cluster,
}

/// How candidate control sets are formed in the covariate scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum CovariateSearch {
    /// Every subset of the `k` controls, searched by size tier.
    AllSubsets,
    /// Two controls, each used on its own, with sample moments fixed at
    /// `x'x/N = z'z/N = 1`, `x'z_k/N = γ`, `z_1'z_2/N = γ²`. The first control
    /// gives the initial specification.
    OneAtATime { gamma: f64 },
}

/// Configuration of one simulated literature.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct DgpConfig {
    pub scenario: DgpScenario,
    pub n_obs: usize,
    /// Number of controls or instruments.
    pub k: usize,
    pub effect: EffectDistribution,
    pub sided: Sided,
    /// `Cov(U, V)` in the IV design.
    pub endog_cov: f64,
    pub pi_range: [f64; 2],
    pub gamma_range: [f64; 2],
    /// `β = beta_scale · h / √N`.
    pub beta_scale: f64,
    /// Minimum first-stage F for an IV specification to be considered.
    pub f_screen: Option<f64>,
    /// Cluster counts tried before the unclustered estimate.
    pub cluster_levels: Vec<usize>,
    pub max_lags: usize,
    pub extra_lags: usize,
    /// Draw `γ` and `π` afresh for every replication.
    pub redraw_design: bool,
    pub alpha: f64,
    pub covariate_search: CovariateSearch,
}

impl DgpConfig {
    /// Defaults for a scenario: `N = 200`, `K = 3`, `h = 0`, two-sided.
    pub fn new(scenario: DgpScenario) -> Self {
        DgpConfig {
            scenario,
            n_obs: 200,
            k: 3,
            effect: EffectDistribution::point(0.0),
            sided: Sided::Two,
            endog_cov: 0.5,
            pi_range: [1.0, 3.0],
            gamma_range: [-0.8, 0.8],
            beta_scale: if scenario == DgpScenario::Iv { 1.0 / 3.0 } else { 1.0 },
            f_screen: None,
            cluster_levels: vec![20, 40, 50, 100],
            max_lags: 4,
            extra_lags: 4,
            redraw_design: true,
            alpha: 0.05,
            covariate_search: CovariateSearch::AllSubsets,
        }
    }

    /// Covariate design matching the two-statistic analytic model with
    /// correlation `ρ = 1 − γ²` and mean `h` for both t-statistics.
    pub fn covariate_pair(gamma: f64) -> Self {
        let mut c = Self::new(DgpScenario::Covariate);
        c.k = 2;
        c.covariate_search = CovariateSearch::OneAtATime { gamma };
        c.beta_scale = 1.0 / sqrt(1.0 - gamma * gamma);
        c
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_effect(mut self, effect: EffectDistribution) -> Self {
        self.effect = effect;
        self
    }

    pub fn with_sided(mut self, sided: Sided) -> Self {
        self.sided = sided;
        self
    }

    pub fn with_f_screen(mut self, f: Option<f64>) -> Self {
        self.f_screen = f;
        self
    }

    /// All cluster counts in search order, ending with singleton clusters.
    pub fn cluster_sequence(&self) -> Vec<usize> {
        let mut v = self.cluster_levels.clone();
        if v.last() != Some(&self.n_obs) {
            v.push(self.n_obs);
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("dgp: {m}")));
        self.effect.validate()?;
        if self.n_obs < self.k + 2 || self.n_obs < 3 {
            return bad("n_obs must be at least k + 2");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.beta_scale.is_finite()) {
            return bad("beta_scale must be finite");
        }
        let range_ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        match self.scenario {
            DgpScenario::Covariate => {
                if self.k == 0 || self.k > 16 {
                    return bad("covariate k must be in 1..=16");
                }
                match self.covariate_search {
                    CovariateSearch::AllSubsets => {
                        if !range_ok(self.gamma_range)
                            || self.gamma_range[0] <= -1.0
                            || self.gamma_range[1] >= 1.0
                        {
                            return bad("gamma_range must lie inside (-1, 1)");
                        }
                    }
                    CovariateSearch::OneAtATime { gamma } => {
                        if self.k != 2 {
                            return bad("one-at-a-time search uses k = 2");
                        }
                        if !(gamma.abs() > 0.0 && gamma.abs() < 1.0) {
                            return bad("gamma must satisfy 0 < |gamma| < 1");
                        }
                    }
                }
            }
            DgpScenario::Iv => {
                if self.k == 0 || self.k > 16 {
                    return bad("iv k must be in 1..=16");
                }
                if !range_ok(self.gamma_range) || self.gamma_range[0] < -1.0 || self.gamma_range[1] > 1.0 {
                    return bad("gamma_range must lie inside [-1, 1]");
                }
                if !range_ok(self.pi_range) {
                    return bad("pi_range must be an ordered finite interval");
                }
                if !(self.endog_cov.abs() < 1.0) {
                    return bad("endog_cov must lie in (-1, 1)");
                }
                if let Some(f) = self.f_screen {
                    if !(f >= 0.0) {
                        return bad("f_screen must be non-negative");
                    }
                }
            }
            DgpScenario::LagLength => {
                if self.max_lags + self.extra_lags >= self.n_obs / 2 {
                    return bad("lag counts too large for n_obs");
                }
            }
            DgpScenario::Cluster => {
                if self.cluster_levels.is_empty() {
                    return bad("cluster_levels must not be empty");
                }
                for &g in &self.cluster_levels {
                    if g < 2 || self.n_obs % g != 0 {
                        return bad("each cluster level must divide n_obs and be at least 2");
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-study design coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Design {
    pub gammas: Vec<f64>,
    pub pis: Vec<f64>,
}

impl Design {
    pub fn draw<R: rand::Rng + ?Sized>(cfg: &DgpConfig, rng: &mut R) -> Self {
        let uni = |r: [f64; 2], rng: &mut R| {
            if r[0] == r[1] {
                r[0]
            } else {
                rng.random_range(r[0]..r[1])
            }
        };
        match (cfg.scenario, cfg.covariate_search) {
            (DgpScenario::Covariate, CovariateSearch::OneAtATime { gamma }) => Design {
                gammas: vec![gamma; 2],
                pis: Vec::new(),
            },
            (DgpScenario::Covariate, CovariateSearch::AllSubsets) => Design {
                gammas: (0..cfg.k).map(|_| uni(cfg.gamma_range, rng)).collect(),
                pis: Vec::new(),
            },
            (DgpScenario::Iv, _) => {
                let gammas = (0..cfg.k).map(|_| uni(cfg.gamma_range, rng)).collect();
                let pis = (0..cfg.k).map(|_| uni(cfg.pi_range, rng)).collect();
                Design { gammas, pis }
            }
            _ => Design::default(),
        }
    }
}
