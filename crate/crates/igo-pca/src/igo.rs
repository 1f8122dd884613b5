//! PCA of gradient orientations: fit, reconstruction and outlier detection.
//!
//! Fitting embeds each orientation image as a unit-modulus complex vector,
//! stacks them into `Z in C^{p x n}` and computes the principal subspace of
//! `Z` with the snapshot method. There is no mean subtraction by default;
//! the transformed data already lives on the complex sphere and the fit
//! operates on it directly. Reconstruction projects an embedding onto the
//! subspace with `B_k B_k^H z` and returns the per-entry angle.

use crate::linalg::{self, ComplexMatrix, LinalgError, Parallelism, PrincipalSubspace};
use crate::orientation::{embed, unembed, GradientFilterSpec, OrientationError, OrientationImage};
use num_complex::Complex64;
use thiserror::Error;

/// Projection entries with modulus at or below this carry no reliable angle;
/// reconstruction marks them invalid.
pub const RECONSTRUCTION_MODULUS_FLOOR: f64 = 1e-6;

/// An eigenvector counts as an outlier axis when its normalized alignment
/// with the query embedding reaches this threshold. Cross terms between
/// dissimilar images scale like `sqrt(p)`, far below the coherent scale `p`
/// for any realistic pixel count, so the threshold separates cleanly.
pub const OUTLIER_ALIGNMENT_THRESHOLD: f64 = 0.9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("no images to fit")]
    EmptyTrainingSet,
    #[error("index {index} out of range for {len} images")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Orientation(#[from] OrientationError),
}

/// Options for [`IgoModel::fit_with`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Filter recorded in the model so new samples can be prepared the same
    /// way the training data was.
    pub filter: GradientFilterSpec,
    /// Subtract the complex sample mean before the subspace fit. Off by
    /// default: the embedding fit needs no centering step.
    pub center: bool,
    pub parallelism: Parallelism,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            filter: GradientFilterSpec::CentralDifference,
            center: false,
            parallelism: Parallelism::default(),
        }
    }
}

/// Fitted principal subspace of gradient orientations.
#[derive(Debug, Clone)]
pub struct IgoModel {
    subspace: PrincipalSubspace,
    filter: GradientFilterSpec,
    height: usize,
    width: usize,
    mean: Option<Vec<Complex64>>,
}

impl IgoModel {
    /// Fits a k-component model with default options.
    pub fn fit(images: &[OrientationImage], k: usize) -> Result<Self, ModelError> {
        Self::fit_with(images, k, FitOptions::default())
    }

    /// Fits a k-component model.
    ///
    /// Vectorizes each image, embeds it onto the complex sphere, forms the
    /// `n x n` Gram matrix of the embeddings and keeps the top `k`
    /// eigenpairs. `k` must not exceed the numerical rank of the Gram
    /// matrix.
    pub fn fit_with(
        images: &[OrientationImage],
        k: usize,
        options: FitOptions,
    ) -> Result<Self, ModelError> {
        let z = embedding_matrix(images)?;
        let (height, width) = (images[0].height(), images[0].width());
        let (z, mean) = if options.center {
            let mut mean = vec![Complex64::new(0.0, 0.0); z.rows()];
            for j in 0..z.cols() {
                for (i, m) in mean.iter_mut().enumerate() {
                    *m += z.get(i, j);
                }
            }
            let scale = 1.0 / z.cols() as f64;
            for m in &mut mean {
                *m *= scale;
            }
            let centered = ComplexMatrix::from_fn(z.rows(), z.cols(), |i, j| z.get(i, j) - mean[i]);
            (centered, Some(mean))
        } else {
            (z, None)
        };
        let subspace = linalg::snapshot_pca_with(&z, k, options.parallelism)?;
        Ok(Self {
            subspace,
            filter: options.filter,
            height,
            width,
            mean,
        })
    }

    pub fn subspace(&self) -> &PrincipalSubspace {
        &self.subspace
    }

    pub fn filter(&self) -> GradientFilterSpec {
        self.filter
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn components(&self) -> usize {
        self.subspace.components()
    }

    /// Retained eigenvalues of the embedding Gram matrix, non-increasing.
    pub fn eigenvalues(&self) -> &[f64] {
        self.subspace.eigenvalues()
    }

    /// Complex sample mean, present only for models fit with centering.
    pub fn mean(&self) -> Option<&[Complex64]> {
        self.mean.as_deref()
    }

    pub(crate) fn from_parts(
        subspace: PrincipalSubspace,
        filter: GradientFilterSpec,
        height: usize,
        width: usize,
        mean: Option<Vec<Complex64>>,
    ) -> Self {
        Self {
            subspace,
            filter,
            height,
            width,
            mean,
        }
    }

    fn check_dims(&self, phi: &OrientationImage) -> Result<(), ModelError> {
        if phi.height() != self.height || phi.width() != self.width {
            return Err(ModelError::Dimension(format!(
                "image {}x{} does not match model {}x{}",
                phi.height(),
                phi.width(),
                self.height,
                self.width
            )));
        }
        Ok(())
    }

    /// Projection of the query embedding onto the subspace, `B_k B_k^H z`.
    ///
    /// This is the raw complex reconstruction; entry moduli act as a
    /// per-pixel confidence channel for the angles returned by
    /// [`reconstruct`](Self::reconstruct).
    pub fn project(&self, phi: &OrientationImage) -> Result<Vec<Complex64>, ModelError> {
        self.check_dims(phi)?;
        let mut z = embed(phi).into_vec();
        if let Some(mean) = &self.mean {
            for (v, m) in z.iter_mut().zip(mean) {
                *v -= m;
            }
        }
        let mut projected = self.subspace.project(&z)?;
        if let Some(mean) = &self.mean {
            for (v, m) in projected.iter_mut().zip(mean) {
                *v += m;
            }
        }
        Ok(projected)
    }

    /// Reconstructs an orientation image through the subspace.
    ///
    /// Embeds, projects and returns the per-pixel angle of the projection.
    /// The modulus of the projection is discarded from the angles but used
    /// to set the validity mask: entries with modulus at or below
    /// [`RECONSTRUCTION_MODULUS_FLOOR`] are flagged invalid.
    pub fn reconstruct(&self, phi: &OrientationImage) -> Result<OrientationImage, ModelError> {
        let projected = self.project(phi)?;
        Ok(unembed(
            &projected,
            self.height,
            self.width,
            RECONSTRUCTION_MODULUS_FLOOR,
        )?)
    }

    /// Column-wise reconstruction of a whole image list; identical to
    /// calling [`reconstruct`](Self::reconstruct) per image.
    pub fn batch_reconstruct(
        &self,
        images: &[OrientationImage],
    ) -> Result<Vec<OrientationImage>, ModelError> {
        images.iter().map(|phi| self.reconstruct(phi)).collect()
    }

    /// Searches the basis for an axis aligned with the embedding of
    /// `images[index]`.
    ///
    /// When an image is pixel-wise dissimilar to every other training image,
    /// one eigenvector of the full-rank fit is, up to phase, its normalized
    /// embedding; the outlier occupies a private axis instead of leaking
    /// into the other components.
    pub fn outlier_axis(
        &self,
        images: &[OrientationImage],
        index: usize,
    ) -> Result<OutlierAxis, ModelError> {
        let Some(phi) = images.get(index) else {
            return Err(ModelError::IndexOutOfRange {
                index,
                len: images.len(),
            });
        };
        self.check_dims(phi)?;
        let z = embed(phi).into_vec();
        let coefficients = self.subspace.coefficients(&z)?;
        let scale = 1.0 / (self.pixel_count() as f64).sqrt();
        let mut best_component = 0usize;
        let mut best_alignment = 0.0f64;
        for (l, c) in coefficients.iter().enumerate() {
            let alignment = c.norm() * scale;
            if alignment > best_alignment {
                best_alignment = alignment;
                best_component = l;
            }
        }
        Ok(OutlierAxis {
            found: best_alignment >= OUTLIER_ALIGNMENT_THRESHOLD,
            component: best_component,
            alignment: best_alignment,
        })
    }
}

/// Result of [`IgoModel::outlier_axis`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierAxis {
    /// Whether the best alignment reaches [`OUTLIER_ALIGNMENT_THRESHOLD`].
    pub found: bool,
    /// Index of the best-aligned basis column.
    pub component: usize,
    /// `|b_l^H z| / sqrt(p)`, in `[0, 1]` for unit-modulus embeddings.
    pub alignment: f64,
}

/// Stacks the embeddings of equal-sized orientation images into a
/// `p x n` matrix.
pub fn embedding_matrix(images: &[OrientationImage]) -> Result<ComplexMatrix, ModelError> {
    let Some(first) = images.first() else {
        return Err(ModelError::EmptyTrainingSet);
    };
    for (i, img) in images.iter().enumerate() {
        if !img.same_shape(first) {
            return Err(ModelError::Dimension(format!(
                "image {i} is {}x{}, expected {}x{}",
                img.height(),
                img.width(),
                first.height(),
                first.width()
            )));
        }
    }
    let columns: Vec<Vec<Complex64>> = images.iter().map(|img| embed(img).into_vec()).collect();
    Ok(ComplexMatrix::from_columns(&columns)?)
}

/// Full eigen-spectrum of the embedding Gram matrix, non-increasing.
///
/// Useful for choosing `k` and for flatness reports; unlike a fit it never
/// fails on rank-deficient data.
pub fn embedding_spectrum(images: &[OrientationImage]) -> Result<Vec<f64>, ModelError> {
    let z = embedding_matrix(images)?;
    let t = linalg::gram(&z)?;
    let eig = linalg::hermitian_eig(&t, linalg::DEFAULT_EIG_TOL)?;
    Ok(eig.eigenvalues)
}
