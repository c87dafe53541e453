//! p-curve models under p-hacking and the tests used to detect it.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every numerical piece:
//!
//! * [`numkit`]: normal and bivariate normal distribution functions, adaptive
//!   Gauss-Legendre quadrature, effect distributions and their mixtures.
//! * [`analytic`]: closed-form p-curves under threshold and minimum p-hacking,
//!   null upper bounds and histogram bin masses.
//! * [`bias_size`]: size distortions and estimator biases caused by p-hacking.
//! * [`dgp`]: the Monte Carlo data-generating processes and specification
//!   searches that produce pools of p-values.
//! * [`pubbias`]: publication selection and mixtures of p-hackers.
//! * [`battery`]: Binomial, Fisher, LCM, Cox-Shi and discontinuity tests.
//! * [`power`]: per-replication power study logic.
//!
//! File formats, the CLI and the parallel harness live in the `pcurve` crate.
#![no_std]
#![allow(clippy::too_many_arguments)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod battery;
pub mod bias_size;
pub mod dgp;
mod error;
pub mod linalg;
pub mod numkit;
pub mod power;
pub mod pubbias;
pub mod rng;

pub use error::{Error, Result};
