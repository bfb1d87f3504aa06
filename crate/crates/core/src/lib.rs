//! Hermitian random matrices built from doubling-map orbits.
//!
//! The crate is organised bottom-up:
//!
//! * [`orbit`]: exact binary-digit dynamics of `x -> 2x mod 1` and digit
//!   resampling.
//! * [`evalfn`]: evaluation functions given by Fourier coefficients, their
//!   symbol `g_f` and correlation sequences.
//! * [`ensemble`]: the block matrices, banded Toeplitz correlation
//!   matrices, Gaussian comparison ensembles and the OU endpoint law.
//! * [`spectral`]: eigendecomposition, Stieltjes transforms, resolvent
//!   diagnostics and band-inverse certificates.
//! * [`sce`]: the scalar self-consistent equation and its density.
//! * [`stats`]: unfolding, gap ratios, spacing histograms, KS distances and
//!   the GUE reference sampler.

pub mod ensemble;
pub mod error;
pub mod evalfn;
pub mod export;
pub mod linalg;
pub mod orbit;
pub mod rng;
pub mod sce;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use faer;
pub use num_complex::Complex64;

pub use ensemble::{EnsembleConfig, HermitianBlockMatrix, Layout};
pub use evalfn::{CorrelationData, FourierSpec};
pub use orbit::{BitOrbit, ResampledOrbit};
pub use sce::{SceSolution, SpectralMeasure};
pub use spectral::Spectrum;
pub use stats::{StatReport, UnfoldedSample};
