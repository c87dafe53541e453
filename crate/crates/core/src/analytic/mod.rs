//! Closed-form p-curves under no hacking, threshold and minimum hacking.
//!
//! All curves refer to one-sided tests of a normal statistic with mean `h`.
//! With `z₀(p) = Φ⁻¹(1−p)` the single-effect null curve is
//! `exp(h z₀(p) − h²/2)`; hacked curves multiply it by a scenario factor Υ.

mod bins;
mod bounds;
mod model;
mod rhohat;

pub use bins::{bin_proportions, bin_proportions_with_breaks, equal_partition};
pub use bounds::{null_bound_integral, null_upper_bound, BinKernel, Sided};
pub use model::{
    g_cov, g_dataset, g_iv, g_variance, null_pcurve, PCurveModel, Scenario, Strategy,
};
pub use rhohat::{build_rhohat_law, RhoHatLaw};
