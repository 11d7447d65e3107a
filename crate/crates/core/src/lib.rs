//! Simulation of pre- and post-selected interferometers with the measuring
//! pointers kept in the state.
//!
//! - [`qstate`]: kets and operators on path ⊗ two-level internal space
//! - [`pointer`]: 1D pointer wavefunctions, analytic or sampled
//! - [`hybrid`]: the photon pipeline and its joint pointer readout
//! - [`neutron`]: neutron interferometer detector probabilities and sweeps
//! - [`analysis`]: weak values and disturbance ensembles
//! - [`io`]: CSV and PGM output
//! - [`verify`]: acceptance checks

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod hybrid;
pub mod io;
pub mod neutron;
pub mod pointer;
pub mod qstate;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
