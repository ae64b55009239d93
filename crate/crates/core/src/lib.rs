//! Full state tomography for two spin qubits in a double quantum dot.
//!
//! * [`qmath`]: 4×4 operator algebra, Pauli and τ bases, fidelity.
//! * [`gates`]: exchange, z-rotation, gradient and ESR gates; circuits.
//! * [`quorum`]: the mutually-unbiased-bases quorum, the James quorum, the
//!   reconstruction matrix 𝒫 and its analysis.
//! * [`dotmodel`]: six-level double-dot Hamiltonian, exchange coupling,
//!   tracked spectra and the readout sweeps.
//! * [`measure`]: binomial shot simulation, imperfect projectors,
//!   calibration overlaps and shot planning.
//! * [`reconstruct`]: linear inversion, covariance prediction and
//!   maximum-likelihood estimation.
//!
//! Monte Carlo work runs on rayon when the `parallel` feature is enabled
//! (the default) and sequentially otherwise; results are bit-identical
//! either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod dotmodel;
pub mod error;
pub mod gates;
pub mod measure;
pub mod par;
pub mod qmath;
pub mod quorum;
pub mod reconstruct;

pub use error::{Result, TomoError};
