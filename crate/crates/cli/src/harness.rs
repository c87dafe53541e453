//! Parallel pool simulation and power studies.
//!
//! Every replication draws from its own RNG stream and results are collected
//! by index, so output does not depend on the thread count. LCM critical
//! values are computed for all window sizes before the battery runs and are
//! only read afterwards.

use std::collections::BTreeMap;

use pcurve_core::battery::{lcm_critical_value, TestKind};
use pcurve_core::dgp::{replication, shared_design, DgpConfig, SearchStrategy, SimPool};
use pcurve_core::power::{replicate, replication_index, study_pool, PowerStudyConfig, PowerTable, Replication};
use pcurve_core::pubbias::draw_observed_with;
use pcurve_core::rng::{stream, Purpose};
use pcurve_core::{Error, Result};
use rayon::prelude::*;

pub fn simulate_pool(cfg: &DgpConfig, strategy: SearchStrategy, reps: u64, seed: u64) -> Result<SimPool> {
    if reps == 0 {
        return Err(Error::Config("pool_reps must be at least 1".into()));
    }
    cfg.validate()?;
    let shared = shared_design(cfg, seed);
    let results = (0..reps)
        .into_par_iter()
        .map(|i| replication(cfg, strategy, seed, i, shared.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimPool::from_results(cfg.clone(), strategy, seed, results))
}

/// A finished power study.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRun {
    pub table: PowerTable,
    pub pool_len: usize,
    pub lcm_critical: BTreeMap<usize, f64>,
}

impl PowerRun {
    /// Largest share of replications in any cell whose Cox-Shi QP failed.
    pub fn qp_failure_rate(&self, mc_reps: usize) -> f64 {
        self.table
            .rows
            .iter()
            .map(|r| r.flags.qp_singular_nonreject as f64 / mc_reps as f64)
            .fold(0.0, f64::max)
    }
}

pub fn run_power_study(cfg: &PowerStudyConfig, pool: Option<SimPool>) -> Result<PowerRun> {
    cfg.validate()?;
    let battery = cfg.battery()?;
    let pool = match pool {
        Some(p) => study_pool(cfg, Some(p))?,
        None if cfg.pool_reps == 0 => study_pool(cfg, None)?,
        None => simulate_pool(&cfg.dgp, cfg.strategy, cfg.pool_reps, cfg.seed)?,
    };
    let (hacked, nohack) = (pool.hacked(), pool.nohack());
    let jobs: Vec<(usize, usize)> = (0..cfg.tau_grid.len())
        .flat_map(|t| (0..cfg.mc_reps).map(move |r| (t, r)))
        .collect();

    let mut lcm_critical = BTreeMap::new();
    if cfg.tests.kinds.contains(&TestKind::Lcm) {
        let window = cfg.tests.window;
        let sizes = jobs
            .par_iter()
            .map(|&(t, r)| {
                let mut rng = stream(cfg.seed, Purpose::Observed, replication_index(t, r));
                let ps = draw_observed_with(&hacked, &nohack, cfg.tau_grid[t], cfg.n, &cfg.selection, &mut rng)?;
                Ok(ps.iter().filter(|&&p| window.contains(p)).count())
            })
            .collect::<Result<std::collections::BTreeSet<usize>>>()?;
        let reps = cfg.tests.lcm_crit_reps;
        lcm_critical = sizes
            .into_par_iter()
            .filter(|&n| n >= 2)
            .map(|n| Ok((n, lcm_critical_value(n, cfg.level, reps, cfg.seed)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
    }

    let crit = |n: usize| {
        lcm_critical
            .get(&n)
            .copied()
            .ok_or(Error::Insufficient("LCM critical value was not precomputed"))
    };
    let flat = jobs
        .par_iter()
        .map(|&(t, r)| replicate(cfg, &battery, &hacked, &nohack, t, r, crit))
        .collect::<Result<Vec<Replication>>>()?;
    let by_tau: Vec<Vec<Replication>> = flat.chunks(cfg.mc_reps).map(|c| c.to_vec()).collect();
    Ok(PowerRun {
        table: PowerTable::aggregate(&cfg.tau_grid, &cfg.tests.kinds, &by_tau),
        pool_len: pool.len(),
        lcm_critical,
    })
}
