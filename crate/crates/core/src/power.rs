//! Power studies: mix p-hacked and honest pools, apply publication
//! selection, run the battery, aggregate rejection rates over τ.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use libm::sqrt;

use crate::analytic::Sided;
use crate::battery::{
    binomial_test, build_constraints, cox_shi_test, discontinuity_test, fisher_test, lcm_critical_value, lcm_test,
    BinomialBins, ConstraintSystem, DiscontinuityConfig, HistogramSpec, TestFlags, TestKind, TestResult,
};
use crate::dgp::{simulate_pool, DgpConfig, SearchStrategy, SimPool};
use crate::error::{Error, Result};
use crate::pubbias::{draw_observed_with, SelectionRule};
use crate::rng::{stream, Purpose};

/// Which tests to run and their settings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct BatteryConfig {
    pub kinds: Vec<TestKind>,
    pub window: HistogramSpec,
    pub binomial: BinomialBins,
    pub discontinuity: DiscontinuityConfig,
    /// Uniform draws behind each LCM critical value.
    pub lcm_crit_reps: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            kinds: TestKind::ALL.to_vec(),
            window: HistogramSpec::default(),
            binomial: BinomialBins::default(),
            discontinuity: DiscontinuityConfig::default(),
            lcm_crit_reps: 10_000,
        }
    }
}

/// A battery with its constraint systems built once.
#[derive(Debug, Clone)]
pub struct Battery {
    pub config: BatteryConfig,
    systems: Vec<(TestKind, ConstraintSystem)>,
}

impl Battery {
    pub fn new(config: BatteryConfig, sided: Sided) -> Result<Self> {
        config.window.validate()?;
        config.binomial.validate()?;
        if config.kinds.is_empty() {
            return Err(Error::Config("no tests selected".into()));
        }
        if config.kinds.contains(&TestKind::Lcm) && config.lcm_crit_reps == 0 {
            return Err(Error::Config("lcm_crit_reps must be positive".into()));
        }
        let mut systems = Vec::new();
        for &k in &config.kinds {
            if let Some(ck) = k.constraint_kind() {
                systems.push((k, build_constraints(ck, &config.window, sided)?));
            }
        }
        Ok(Battery { config, systems })
    }

    /// Run every selected test. `lcm_crit` maps a window size to the LCM
    /// critical value.
    pub fn run<C>(&self, pvalues: &[f64], level: f64, mut lcm_crit: C) -> Result<Vec<TestResult>>
    where
        C: FnMut(usize) -> Result<f64>,
    {
        let cfg = &self.config;
        let mut out = Vec::with_capacity(cfg.kinds.len());
        for &k in &cfg.kinds {
            let r = match k {
                TestKind::Binomial => binomial_test(pvalues, &cfg.binomial, level)?,
                TestKind::Fisher => fisher_test(pvalues, &cfg.window, level)?,
                TestKind::Lcm => lcm_test(pvalues, &cfg.window, level, &mut lcm_crit)?,
                TestKind::Discontinuity => discontinuity_test(pvalues, &cfg.window, &cfg.discontinuity, level)?,
                TestKind::Cs1 | TestKind::Csub | TestKind::Cs2b => {
                    let cs = &self.systems.iter().find(|(kk, _)| *kk == k).expect("built in new").1;
                    cox_shi_test(pvalues, cs, &cfg.window, level)?
                }
            };
            out.push(r);
        }
        Ok(out)
    }
}

/// Sequential per-size cache of LCM critical values. Values depend only on
/// `(seed, n)`, so any evaluation order gives the same numbers.
#[derive(Debug, Clone)]
pub struct LcmCache {
    level: f64,
    reps: usize,
    seed: u64,
    values: BTreeMap<usize, f64>,
}

impl LcmCache {
    pub fn new(level: f64, reps: usize, seed: u64) -> Self {
        LcmCache {
            level,
            reps,
            seed,
            values: BTreeMap::new(),
        }
    }

    pub fn get(&mut self, n: usize) -> Result<f64> {
        if let Some(&v) = self.values.get(&n) {
            return Ok(v);
        }
        let v = lcm_critical_value(n, self.level, self.reps, self.seed)?;
        self.values.insert(n, v);
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct PowerStudyConfig {
    pub dgp: DgpConfig,
    pub strategy: SearchStrategy,
    #[cfg_attr(feature = "serde", serde(default = "default_tau_grid"))]
    pub tau_grid: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub selection: SelectionRule,
    #[cfg_attr(feature = "serde", serde(default = "default_n"))]
    pub n: usize,
    #[cfg_attr(feature = "serde", serde(default = "default_mc_reps"))]
    pub mc_reps: usize,
    #[cfg_attr(feature = "serde", serde(default = "default_pool_reps"))]
    pub pool_reps: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub tests: BatteryConfig,
    #[cfg_attr(feature = "serde", serde(default = "default_level"))]
    pub level: f64,
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub output_dir: Option<String>,
}

pub fn default_tau_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn default_n() -> usize {
    5000
}

fn default_mc_reps() -> usize {
    500
}

fn default_pool_reps() -> u64 {
    100_000
}

fn default_level() -> f64 {
    0.05
}

impl PowerStudyConfig {
    /// Desk-scale defaults around a DGP.
    pub fn new(dgp: DgpConfig, strategy: SearchStrategy, seed: u64) -> Self {
        PowerStudyConfig {
            dgp,
            strategy,
            tau_grid: default_tau_grid(),
            selection: SelectionRule::None,
            n: default_n(),
            mc_reps: default_mc_reps(),
            pool_reps: default_pool_reps(),
            tests: BatteryConfig::default(),
            level: default_level(),
            seed,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        self.selection.validate()?;
        if self.tau_grid.is_empty() || self.tau_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Config("tau_grid must be a nonempty subset of [0, 1]".into()));
        }
        if self.mc_reps == 0 {
            return Err(Error::Config("mc_reps must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config("level must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn battery(&self) -> Result<Battery> {
        Battery::new(self.tests.clone(), self.dgp.sided)
    }
}

/// What one Monte Carlo replication produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub n_kept: usize,
    pub results: Vec<TestResult>,
}

/// Stream index of replication `rep` at grid point `tau_index`.
pub fn replication_index(tau_index: usize, rep: usize) -> u64 {
    ((tau_index as u64) << 32) | rep as u64
}

/// One draw of an observed literature and the battery applied to it.
pub fn replicate<C>(
    cfg: &PowerStudyConfig,
    battery: &Battery,
    hacked: &[f64],
    nohack: &[f64],
    tau_index: usize,
    rep: usize,
    lcm_crit: C,
) -> Result<Replication>
where
    C: FnMut(usize) -> Result<f64>,
{
    let tau = cfg.tau_grid[tau_index];
    let mut rng = stream(cfg.seed, Purpose::Observed, replication_index(tau_index, rep));
    let ps = draw_observed_with(hacked, nohack, tau, cfg.n, &cfg.selection, &mut rng)?;
    let results = battery.run(&ps, cfg.level, lcm_crit)?;
    Ok(Replication {
        n_kept: ps.len(),
        results,
    })
}

/// Counts of flagged outcomes in one table cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlagCounts {
    pub qp_singular_nonreject: u64,
    pub insufficient_sample: u64,
    pub bandwidth_truncated: u64,
    pub infinite_statistic: u64,
}

impl FlagCounts {
    fn add(&mut self, f: &TestFlags) {
        self.qp_singular_nonreject += f.qp_singular_nonreject as u64;
        self.insufficient_sample += f.insufficient_sample as u64;
        self.bandwidth_truncated += f.bandwidth_truncated as u64;
        self.infinite_statistic += f.infinite_statistic as u64;
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerRow {
    pub tau: f64,
    pub test: TestKind,
    pub rejection_rate: f64,
    pub mc_std_err: f64,
    pub n_kept_mean: f64,
    pub flags: FlagCounts,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
}

impl PowerTable {
    /// Aggregate replications; `by_tau[i]` holds all replications at
    /// `tau_grid[i]` in replication order.
    pub fn aggregate(tau_grid: &[f64], kinds: &[TestKind], by_tau: &[Vec<Replication>]) -> Self {
        let mut rows = Vec::with_capacity(tau_grid.len() * kinds.len());
        for (&tau, reps) in tau_grid.iter().zip(by_tau) {
            let m = reps.len().max(1) as f64;
            let n_kept_mean = reps.iter().map(|r| r.n_kept as f64).sum::<f64>() / m;
            for (j, &kind) in kinds.iter().enumerate() {
                let mut hits = 0u64;
                let mut flags = FlagCounts::default();
                for r in reps {
                    let t = &r.results[j];
                    hits += t.reject as u64;
                    flags.add(&t.flags);
                }
                let rate = hits as f64 / m;
                rows.push(PowerRow {
                    tau,
                    test: kind,
                    rejection_rate: rate,
                    mc_std_err: sqrt(rate * (1.0 - rate) / m),
                    n_kept_mean,
                    flags,
                });
            }
        }
        PowerTable { rows }
    }

    pub fn get(&self, tau: f64, test: TestKind) -> Option<&PowerRow> {
        self.rows.iter().find(|r| r.tau == tau && r.test == test)
    }
}

/// Pool for a study: the supplied one, or a fresh simulation of
/// `pool_reps` replications.
pub fn study_pool(cfg: &PowerStudyConfig, pool: Option<SimPool>) -> Result<SimPool> {
    match pool {
        Some(p) if !p.is_empty() => Ok(p),
        _ if cfg.pool_reps == 0 => Err(Error::Config("no pool supplied and pool_reps = 0".into())),
        _ => simulate_pool(&cfg.dgp, cfg.strategy, cfg.pool_reps, cfg.seed),
    }
}

/// Single-threaded power study.
pub fn run_power_study(cfg: &PowerStudyConfig, pool: Option<SimPool>) -> Result<PowerTable> {
    cfg.validate()?;
    let battery = cfg.battery()?;
    let pool = study_pool(cfg, pool)?;
    let (hacked, nohack) = (pool.hacked(), pool.nohack());
    let mut cache = LcmCache::new(cfg.level, cfg.tests.lcm_crit_reps, cfg.seed);
    let mut by_tau = Vec::with_capacity(cfg.tau_grid.len());
    for ti in 0..cfg.tau_grid.len() {
        let mut reps = Vec::with_capacity(cfg.mc_reps);
        for rep in 0..cfg.mc_reps {
            reps.push(replicate(cfg, &battery, &hacked, &nohack, ti, rep, |n| cache.get(n))?);
        }
        by_tau.push(reps);
    }
    Ok(PowerTable::aggregate(&cfg.tau_grid, &cfg.tests.kinds, &by_tau))
}
