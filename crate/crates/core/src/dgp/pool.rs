use alloc::vec::Vec;

use super::config::{Design, DgpConfig};
use super::search::{run_strategy, PoolEntry, SearchStrategy};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Paired honest and hacked p-values from one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPool {
    pub entries: Vec<PoolEntry>,
    pub config: DgpConfig,
    pub strategy: SearchStrategy,
    pub seed: u64,
    /// Replications where no specification could be fitted.
    pub dropped: u64,
}

impl SimPool {
    /// Assemble a pool from per-replication results in replication order.
    pub fn from_results(
        config: DgpConfig,
        strategy: SearchStrategy,
        seed: u64,
        results: impl IntoIterator<Item = Option<PoolEntry>>,
    ) -> Self {
        let mut entries = Vec::new();
        let mut dropped = 0;
        for r in results {
            match r {
                Some(e) => entries.push(e),
                None => dropped += 1,
            }
        }
        SimPool {
            entries,
            config,
            strategy,
            seed,
            dropped,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hacked(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.p_hacked).collect()
    }

    pub fn nohack(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.p_nohack).collect()
    }
}

/// The design shared by all replications when designs are not redrawn.
pub fn shared_design(cfg: &DgpConfig, seed: u64) -> Option<Design> {
    (!cfg.redraw_design).then(|| Design::draw(cfg, &mut stream(seed, Purpose::Design, 0)))
}

/// Replication `index` of a pool. Depends only on its arguments.
pub fn replication(
    cfg: &DgpConfig,
    strategy: SearchStrategy,
    seed: u64,
    index: u64,
    shared: Option<&Design>,
) -> Result<Option<PoolEntry>> {
    let mut rng = stream(seed, Purpose::Pool, index);
    match shared {
        Some(d) => run_strategy(cfg, strategy, d, &mut rng),
        None => {
            let d = Design::draw(cfg, &mut rng);
            run_strategy(cfg, strategy, &d, &mut rng)
        }
    }
}

/// Sequential pool simulation.
pub fn simulate_pool(cfg: &DgpConfig, strategy: SearchStrategy, reps: u64, seed: u64) -> Result<SimPool> {
    if reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    cfg.validate()?;
    let shared = shared_design(cfg, seed);
    let results = (0..reps)
        .map(|i| replication(cfg, strategy, seed, i, shared.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimPool::from_results(cfg.clone(), strategy, seed, results))
}
