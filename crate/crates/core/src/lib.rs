//! Unsupervised infomax representation learning on image patches.
//!
//! The pipeline implemented here learns a bank of linear filters by maximizing
//! an information-theoretic objective over a population of sigmoidal units:
//!
//! 1. [`ingest`] loads grayscale images (PGM, IDX) and samples random square
//!    patches into a column matrix.
//! 2. [`whiten`] fits the patch covariance eigendecomposition, selects the
//!    retained rank `K0` from a cumulative-energy threshold, and applies
//!    PCA/ZCA whitening or low-rank reconstruction.
//! 3. [`model`] defines the sigmoidal tuning nonlinearity, its analytic
//!    initialization and the slope schedule.
//! 4. [`train`] optimizes the `K0 x K1` filter matrix `C` on the Stiefel
//!    manifold (orthonormal rows) with an adaptive backtracking step, using
//!    one of two practical objectives or an exact reference objective.
//! 5. [`analyze`] computes evaluation metrics (coefficient entropy in bits,
//!    conditional entropy in nats), extracts basis/filter dictionaries,
//!    renders filter grids and runs the patch-based denoising pipeline.
//! 6. [`io`] defines the on-disk matrix, whitening-model and checkpoint
//!    formats used by the CLI.
//!
//! All heavy evaluations partition work into fixed-size column chunks reduced
//! in a fixed order, so results are bitwise reproducible regardless of the
//! worker thread count.

pub mod analyze;
pub mod error;
pub mod ingest;
pub mod io;
pub(crate) mod linalg;
pub mod model;
pub(crate) mod parallel;
pub mod train;
pub mod whiten;

pub use error::{Error, Result};
