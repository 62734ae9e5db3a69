//! Spectral inference for high-dimensional spatial-sign covariance matrices
//! (SSCM) under elliptical populations.
//!
//! The crate covers the whole pipeline from simulated or loaded data to
//! inference on the population spectrum:
//!
//! - [`sampling`]: elliptical draws, the spatial-sign transform, the SSCM.
//! - [`moments`]: empirical spectral moments and the partition recursion
//!   between spectral and population moments.
//! - [`series`]: truncated power series and the explicit moment CLT.
//! - [`mplaw`]: the generalized Marčenko–Pastur law (Stieltjes transform,
//!   density, support).
//! - [`psd`]: discrete population spectra, moment inversion and
//!   bias-corrected estimation with confidence intervals.
//! - [`order_test`]: the Hankel-determinant test for the number of distinct
//!   population eigenvalues.
//! - [`harness`]: reproducible Monte Carlo experiments.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod moments;
pub mod mplaw;
pub mod psd;
pub mod rng;
pub mod sampling;
pub mod series;

pub use error::{Error, Result};
