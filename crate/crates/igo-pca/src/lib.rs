//! Principal component analysis of image gradient orientations.
//!
//! Instead of pixel intensities, images enter the analysis through their
//! per-pixel gradient orientation, mapped onto the complex unit sphere via
//! `z = exp(j * phi)`. Correlation between images becomes a cosine kernel
//! over orientation differences, and linear complex PCA of the embedded
//! data yields a subspace estimate with a useful property: regions whose
//! orientation differences look uniform, such as occlusions or foreign
//! textures, contribute approximately nothing to the kernel and so cannot
//! drag the subspace the way large intensity errors drag a least-squares
//! fit.
//!
//! The pieces:
//!
//! - [`linalg`]: dense complex matrices, a Hermitian Jacobi eigensolver and
//!   the snapshot method for the small-sample-size regime (`n << p`).
//! - [`orientation`]: gradient filters, orientation images, the cosine
//!   kernel and distance, and the complex-sphere embedding.
//! - [`igo`]: the orientation-domain PCA model: fit, reconstruction,
//!   outlier-axis detection.
//! - [`baseline`]: plain least-squares PCA of intensities, the comparison
//!   baseline.
//! - [`stats`]: Kolmogorov-Smirnov uniformity testing, eigen-spectrum
//!   flatness and the seeded generator behind all Monte Carlo runs.
//! - [`io`]: PGM/PNG ingestion and bit-exact binary persistence of models
//!   and orientation images.
//! - [`synth`], [`manifest`], [`commands`]: synthetic low-rank datasets
//!   with seeded corruptions, dataset manifests and the operations behind
//!   the `igo-pca` binary.
//!
//! The `examples/` directory holds one runnable walkthrough per
//! capability; start with `fit_and_reconstruct`.

pub mod baseline;
pub mod commands;
pub mod igo;
pub mod io;
pub mod linalg;
pub mod manifest;
pub mod orientation;
pub mod stats;
pub mod synth;

pub use baseline::L2Model;
pub use igo::{FitOptions, IgoModel, OutlierAxis};
pub use linalg::{ComplexMatrix, EigenDecomposition, Parallelism, PrincipalSubspace};
pub use orientation::{ComplexEmbedding, GradientFilterSpec, GrayImage, OrientationImage};
pub use stats::{KsResult, SpectrumReport, SplitMix64};
