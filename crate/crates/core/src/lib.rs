//! Spectral computations for extended CMV operators whose Verblunsky
//! coefficients are periodic or limit-periodic.
//!
//! Limit-periodic coefficients are generated by sampling the dyadic
//! odometer: a coset table `f` at level `k` induces `α(n) = f(Tⁿω)`, which
//! is `2^k`-periodic. Everything spectral is computed from periodic stage
//! approximants:
//!
//! - [`coeffs`]: coefficient values, `ρ`, periodic sequences
//! - [`odometer`]: the Cantor group, sampling functions, lifting
//! - [`cmv`]: finite windows of the extended CMV matrix, norm estimates
//! - [`transfer`]: two-step transfer matrices and the Gordon modulus `γ`
//! - [`floquet`]: Floquet matrices, the discriminant, bands and gaps
//! - [`specmeasure`]: Floquet solutions, spectral densities, `L^t` integrals
//! - [`gordon`]: Gordon certificates and approximant construction
//! - [`construct`]: the gap-opening Cantor and AC iterations
//! - [`verify`]: the acceptance checks, runnable from tests or the CLI

pub mod cmv;
pub mod coeffs;
pub mod construct;
pub mod error;
pub mod floquet;
pub mod gordon;
pub mod io;
pub mod linalg;
pub mod odometer;
pub mod oracle;
pub mod quadrature;
pub mod specmeasure;
pub mod transfer;
pub mod verify;

pub use coeffs::{make_periodic, rho, CoefficientWindow, PeriodicSeq, SchurRadius, VerblunskyValue};
pub use error::{Error, Result};
pub use odometer::{lift, sup_distance, OdometerPoint, SamplingFn};

pub use num_complex::Complex64;
