//! Simulation and optimization toolkit for a frequency-diverse-array (FDA),
//! RIS-aided integrated sensing and communication (ISAC) system.
//!
//! The crate is organised bottom-up:
//!
//! - [`scenario`]: configuration, unit conversions, geometry sampling and
//!   large-scale path loss.
//! - [`channels`]: per-frequency channel and steering-vector synthesis and
//!   the cascaded BS-RIS-user / BS-RIS-target-RIS-BS channels.
//! - [`metrics`]: user SINR, sum rate and radar SCNR.
//! - [`sust`]: closed-form SCNR results for the single-user single-target
//!   case together with an independent eigen-solver oracle.
//! - [`numerics`]: QCQP with one constraint, generalized eigenvectors,
//!   sinusoid majorizers and the scalar interval minimizer.
//! - [`ao`]: the fractional-programming alternating optimization solver.
//! - [`experiments`]: baseline schemes, Monte Carlo sweeps and CSV output.

pub mod ao;
pub mod channels;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod numerics;
pub mod scenario;
pub mod sust;

pub use error::{IsacError, Result};

/// Complex double used throughout the crate.
pub type C64 = num_complex::Complex64;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
