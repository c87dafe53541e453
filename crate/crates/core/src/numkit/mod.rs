//! Special functions, quadrature and effect distributions.

mod bvn;
mod effect;
mod gamma_fit;
mod lemma1;
mod normal;
mod quad;
pub mod special;

pub use bvn::bvn_cdf;
pub use effect::{mixture_integral, EffectDistribution};
pub use gamma_fit::fit_gamma_mle;
pub use lemma1::lemma1_integral;
pub use normal::{norm_cdf, norm_pdf, norm_quantile, norm_sf, z0};
pub use quad::{gauss_legendre, Quadrature, QuadratureSpec};

pub(crate) use normal::inv_upper;
