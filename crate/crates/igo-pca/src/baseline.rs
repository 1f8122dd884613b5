//! Least-squares PCA of pixel intensities, the comparison baseline.
//!
//! Minimizes `|| X - B_k B_k^T X ||_F^2` over orthonormal `B_k` for
//! mean-centered data, solved through the same snapshot machinery as the
//! orientation model: the `n x n` Gram matrix of the centered images is
//! eigendecomposed instead of the `p x p` covariance, which is the only
//! practical route when `n << p`.

use crate::linalg::{self, ComplexMatrix, LinalgError, Parallelism};
use crate::orientation::{GrayImage, OrientationError};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("need at least 2 images, got {0}")]
    TooFewImages(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Orientation(#[from] OrientationError),
}

/// Intensity-domain PCA model: sample mean, orthonormal basis and the
/// retained eigenvalues of the centered Gram matrix.
#[derive(Debug, Clone)]
pub struct L2Model {
    mean: Vec<f64>,
    /// Column-major `p x k` basis.
    basis: Vec<f64>,
    eigenvalues: Vec<f64>,
    height: usize,
    width: usize,
    k: usize,
}

impl L2Model {
    /// Fits a k-component intensity PCA model.
    ///
    /// The sample mean is always subtracted; `k` must stay below the image
    /// count (centered data has rank at most `n - 1`).
    pub fn fit(images: &[GrayImage], k: usize) -> Result<Self, BaselineError> {
        Self::fit_with(images, k, Parallelism::default())
    }

    pub fn fit_with(
        images: &[GrayImage],
        k: usize,
        parallelism: Parallelism,
    ) -> Result<Self, BaselineError> {
        let n = images.len();
        if n < 2 {
            return Err(BaselineError::TooFewImages(n));
        }
        let (height, width) = (images[0].height(), images[0].width());
        for (i, img) in images.iter().enumerate() {
            if img.height() != height || img.width() != width {
                return Err(BaselineError::Dimension(format!(
                    "image {i} is {}x{}, expected {height}x{width}",
                    img.height(),
                    img.width()
                )));
            }
        }
        if k >= n {
            return Err(BaselineError::Linalg(LinalgError::RankExceeded {
                requested: k,
                rank: n - 1,
            }));
        }
        let p = height * width;
        let mut mean = vec![0.0; p];
        for img in images {
            for (m, &v) in mean.iter_mut().zip(img.as_slice()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        // Centered data as a complex matrix with zero imaginary parts; the
        // rotations of the eigensolver stay exactly real on real input.
        let x = ComplexMatrix::from_fn(p, n, |i, j| {
            Complex64::new(images[j].as_slice()[i] - mean[i], 0.0)
        });
        let subspace = linalg::snapshot_pca_with(&x, k, parallelism)?;
        let mut basis = Vec::with_capacity(p * k);
        for j in 0..k {
            for i in 0..p {
                basis.push(subspace.basis().get(i, j).re);
            }
        }
        Ok(Self {
            mean,
            basis,
            eigenvalues: subspace.eigenvalues().to_vec(),
            height,
            width,
            k,
        })
    }

    pub(crate) fn from_parts(
        mean: Vec<f64>,
        basis: Vec<f64>,
        eigenvalues: Vec<f64>,
        height: usize,
        width: usize,
        k: usize,
    ) -> Self {
        Self {
            mean,
            basis,
            eigenvalues,
            height,
            width,
            k,
        }
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
        self.k
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Column `j` of the basis.
    pub fn basis_column(&self, j: usize) -> &[f64] {
        let p = self.pixel_count();
        &self.basis[j * p..(j + 1) * p]
    }

    /// Column-major basis entries, `p * k` values.
    pub fn basis_raw(&self) -> &[f64] {
        &self.basis
    }

    /// Projection coefficients `B_k^T (x - mean)`.
    pub fn coefficients(&self, img: &GrayImage) -> Result<Vec<f64>, BaselineError> {
        self.check_dims(img)?;
        let centered: Vec<f64> = img
            .as_slice()
            .iter()
            .zip(&self.mean)
            .map(|(&v, &m)| v - m)
            .collect();
        Ok((0..self.k)
            .map(|j| {
                self.basis_column(j)
                    .iter()
                    .zip(&centered)
                    .map(|(&b, &c)| b * c)
                    .sum()
            })
            .collect())
    }

    /// Reconstruction `mean + B_k B_k^T (x - mean)`.
    pub fn reconstruct(&self, img: &GrayImage) -> Result<GrayImage, BaselineError> {
        let coefficients = self.coefficients(img)?;
        let mut out = self.mean.clone();
        for (j, &c) in coefficients.iter().enumerate() {
            for (o, &b) in out.iter_mut().zip(self.basis_column(j)) {
                *o += c * b;
            }
        }
        Ok(GrayImage::new(self.height, self.width, out)?)
    }

    fn check_dims(&self, img: &GrayImage) -> Result<(), BaselineError> {
        if img.height() != self.height || img.width() != self.width {
            return Err(BaselineError::Dimension(format!(
                "image {}x{} does not match model {}x{}",
                img.height(),
                img.width(),
                self.height,
                self.width
            )));
        }
        Ok(())
    }
}
