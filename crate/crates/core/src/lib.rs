//! One-bit MIMO radar toolbox.
//!
//! Simulates a collocated MIMO radar that compresses the spatial and Doppler
//! domains through random antenna/pulse selection and quantizes each received
//! sample to one bit against a known time-varying threshold. Targets are
//! recovered gridlessly: an ADMM iteration solves an ℓ1-regularized
//! atomic-norm program, and angle/Doppler frequencies are read off the
//! recovered Toeplitz blocks by Vandermonde decomposition. Fisher-information
//! and Cramér–Rao bound routines quantify what the one-bit front end costs,
//! and a Monte Carlo harness reproduces those trade-offs end to end.

pub mod crb;
pub mod error;
pub mod harness;
pub mod sampling;
pub mod scene;
pub mod seeds;
pub mod solver;
pub mod spectral;

pub mod cli;

pub use error::{Error, Result};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dynamically-sized complex column vector.
pub type CVector = DVector<Complex64>;
/// Dynamically-sized complex matrix.
pub type CMatrix = DMatrix<Complex64>;
