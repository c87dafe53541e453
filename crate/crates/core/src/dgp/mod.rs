//! Monte Carlo studies in which researchers search over control sets,
//! instrument sets, HAC lag lengths or cluster levels.
//!
//! Each replication draws data, runs every specification the strategy asks
//! for and records the honest p-value of the initial specification next to
//! the reported one.

mod config;
mod estimators;
mod pool;
mod search;

pub use config::{CovariateSearch, Design, DgpConfig, DgpScenario};
pub use estimators::{
    autocov_sums, bartlett_sum, bic_lag_select, cluster_se, iv_2sls_fit, newey_west_se, ols_fit, pvalue,
    FitResult, Gram, IvGram,
};
pub use pool::{replication, shared_design, simulate_pool, SimPool};
pub use search::{run_strategy, subset_tiers, tiered_search, PoolEntry, SearchStrategy};

#[cfg(test)]
mod tests;
