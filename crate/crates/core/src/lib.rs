//! Counting-statistics bounds for determinantal and Pfaffian point processes.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: sinc family, Bessel J, Airy, incomplete gamma, quadrature rules.
//! * [`kernels`]: correlation kernels, growth envelopes and density factorizations.
//! * [`bounds`]: divided differences, Cauchy coefficient bounds, tail and moment constants.
//! * [`exact`]: Nyström spectra, Bernoulli counting laws, Pfaffians, analytic cross-checks.
//! * [`sampler`]: spectral sampling and Monte Carlo estimators for pair statistics.

pub mod bounds;
pub mod error;
pub mod exact;
pub mod kernels;
pub mod linalg;
pub mod sampler;
pub mod specfun;

pub use error::{Error, Result};
