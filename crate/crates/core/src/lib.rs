//! Reduced-density-matrix dynamics of an open quantum system linearly coupled
//! to a harmonic bath, computed with the iterative tensor propagator for the
//! discretized Feynman–Vernon path integral.
//!
//! Pipeline: [`bath`] evaluates α(t) from a spectral density, [`eta`] turns it
//! into discretized influence coefficients, [`system`] builds the short-time
//! propagator, and [`propagation`] runs the memory-truncated tensor scheme.

pub mod bath;
pub mod bench;
pub mod config;
pub mod driver;
pub mod error;
pub mod eta;
pub mod output;
pub mod propagation;
pub mod quadrature;
pub mod system;

pub use error::{Error, Result};
