//! Delsarte-type bounds for mutually unbiased bases from positive definite
//! functions on the unitary group.
//!
//! - [`linalg`]: dense complex matrices, predicates, Hermitian eigenvalues
//! - [`haar`]: Haar sampling on `U(d)` and Monte Carlo integration
//! - [`witness`]: witness functions (`h0`, `h`, `h_β`, `m1`, `m2`, `m`) and the bound
//! - [`pdcert`]: Gram-matrix evidence and refutation search for positive definiteness
//! - [`mub`]: complete MUB constructions and verification
//! - [`catalog6`]: 6x6 complex Hadamard families and the vanishing check

pub mod catalog6;
pub mod haar;
pub mod linalg;
pub mod mub;
pub mod pdcert;
pub mod witness;

pub use haar::{IntegralEstimate, SamplerConfig};
pub use linalg::{Matrix, Tolerance};
pub use mub::MubSystem;
pub use num_complex::Complex64;
pub use witness::{CombinationKind, WitnessFunction};
