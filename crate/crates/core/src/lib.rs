//! Badly approximable channel designs for multichannel boxcar deconvolution.
//!
//! The crate builds badly approximable M-tuples inside a prescribed interval,
//! checks their Diophantine behaviour by exhaustive scans, and uses them as
//! channel positions for a periodized-Meyer hard-thresholding estimator whose
//! L² risk is measured by Monte Carlo.

pub mod artifact;
pub mod construct;
pub mod diophantine;
pub mod error;
pub mod estimator;
pub mod fourier;
pub mod meyer;
pub mod model;
pub mod precision;
pub mod risk;
pub mod signals;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
