//! Special functions and quadrature rules used by the kernels.
//!
//! Everything here is deterministic and allocation-free apart from the
//! quadrature constructors.

mod airy;
mod bessel;
mod gamma;
mod quadrature;
mod sinc;

pub use airy::{airy, airy_ai, airy_ai_prime, airy_bi_majorant, airy_tail_integral, AIRY_MAX, AIRY_MIN};
pub use bessel::{bessel_j, bessel_j_scaled, bessel_jy, bessel_k_pair, BESSEL_X_MAX};
pub use gamma::{gamma, incomplete_gamma_ratio, ln_factorial, ln_gamma};
pub use quadrature::{adaptive_gauss_kronrod, gauss_legendre, QuadratureRule};
pub use sinc::{sinc, sinc_antiderivative, sinc_derivative, sine_integral};
