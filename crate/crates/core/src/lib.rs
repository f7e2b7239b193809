//! Hurst exponent estimation from wavelet spectra.
//!
//! The crate covers the whole chain used to assess scaling in signals and
//! images:
//!
//! * [`filter`] and [`dwt`]: orthonormal filters and periodic 1-D/2-D
//!   discrete wavelet transforms.
//! * [`synthesis`]: exact fractional Brownian motion (1-D) and fractional
//!   Brownian field (2-D) generation, plus level contamination.
//! * [`spectrum`]: per-level mean energies and their log2 spectrum, with
//!   optional bias corrections.
//! * [`estimators`]: OLS, Abry-Veitch and the Theil-type pairwise estimator.
//! * [`harness`]: Monte-Carlo benchmarking, patch features, nested ANOVA and
//!   logistic classification with ROC analysis.

pub mod dwt;
pub mod error;
pub mod estimators;
pub mod filter;
pub mod harness;
pub mod io;
pub mod rng;
pub mod spectrum;
pub mod synthesis;

pub use dwt::{Decomposition, Decomposition1D, Decomposition2D, Direction, Grid2D};
pub use error::{Error, Result};
pub use estimators::{HurstEstimate, Method};
pub use filter::{FilterName, WaveletFilter};
pub use spectrum::{BiasMode, WaveletSpectrum};
