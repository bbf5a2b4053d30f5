//! Numerics for writing an optical orbital-angular-momentum (OAM) qubit onto a
//! spinor Bose-Einstein condensate and reading it back out.
//!
//! The crate is `no_std` (with `alloc`). Everything that touches files, the
//! command line or configuration formats lives in the `oamvortex` crate.
//!
//! Modules, bottom up:
//! - [`special`]: factorials and associated Laguerre polynomials.
//! - [`optics`]: Laguerre-Gaussian modes, beam splitters, Dove prism, Mach-Zehnder.
//! - [`traps`]: harmonic and Mexican-hat traps, trial wavefunctions, chemical potential.
//! - [`quadrature`]: adaptive Gauss-Kronrod and tensor Gauss-Legendre rules.
//! - [`integrals`]: the overlap integrals that set the rate-equation coefficients.
//! - [`ode`]: Dormand-Prince 5(4) with dense output.
//! - [`dynamics`]: three- and five-level rate equations and the figure experiments.
//! - [`detection`]: interference of two vortices and inversion of the fringes.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod detection;
pub mod dynamics;
pub mod error;
pub mod integrals;
pub mod ode;
pub mod optics;
pub mod quadrature;
pub mod special;
pub mod traps;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
