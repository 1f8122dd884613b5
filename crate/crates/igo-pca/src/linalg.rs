//! Dense complex matrices, Hermitian eigendecomposition and snapshot PCA.
//!
//! The eigensolver is a cyclic Jacobi iteration generalized to Hermitian
//! matrices: each rotation is a complex Givens rotation chosen to annihilate
//! one off-diagonal entry. Jacobi is slower than tridiagonalization-based
//! methods for large matrices but delivers eigenvectors with excellent
//! orthogonality, and the matrices handled here are small (n x n Gram
//! matrices with n equal to the number of images).
//!
//! `snapshot_pca` computes the principal subspace of a tall matrix
//! `Z in C^{p x n}` with `n << p` from the small Gram matrix `Z^H Z`
//! instead of the `p x p` outer product, the classic trick for
//! small-sample-size problems.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

/// Jacobi sweeps allowed before giving up.
const MAX_SWEEPS: usize = 30;

/// Default off-diagonal tolerance (relative to the Frobenius norm).
pub const DEFAULT_EIG_TOL: f64 = 1e-13;

/// Relative max-norm tolerance for the Hermitian input check.
const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension error: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },
    #[error("symmetry error: matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("convergence error: Jacobi iteration did not converge in {0} sweeps")]
    NoConvergence(usize),
    #[error("rank error: requested {requested} components but numerical rank is {rank}")]
    RankExceeded { requested: usize, rank: usize },
    #[error("rank error: at least one component must be requested")]
    ZeroComponents,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Builds a matrix from row-major data, validating shape and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension {
                expected: format!("{} entries", rows * cols),
                got: format!("{}", data.len()),
            });
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Stacks column vectors of equal length into a matrix.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self, LinalgError> {
        let cols = columns.len();
        if cols == 0 {
            return Err(LinalgError::Dimension {
                expected: "at least one column".into(),
                got: "0".into(),
            });
        }
        let rows = columns[0].len();
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(LinalgError::Dimension {
                    expected: format!("column length {rows}"),
                    got: format!("{} in column {j}", c.len()),
                });
            }
        }
        Ok(Self::from_fn(rows, cols, |i, j| columns[j][i]))
    }

    fn check_finite(&self) -> Result<(), LinalgError> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.get(i, j);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copies column `j` out of the row-major storage.
    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Plain matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Dimension {
                expected: format!("{} rows on rhs", self.cols),
                got: format!("{}", rhs.rows),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self * v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::Dimension {
                expected: format!("vector length {}", self.cols),
                got: format!("{}", v.len()),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Complex64::new(0.0, 0.0), |acc, (a, x)| acc + a * x)
            })
            .collect())
    }

    /// `self^H * v`, computed without materializing the transpose.
    pub fn herm_mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        if v.len() != self.rows {
            return Err(LinalgError::Dimension {
                expected: format!("vector length {}", self.rows),
                got: format!("{}", v.len()),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (i, &x) in v.iter().enumerate() {
            let row = self.row(i);
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * x;
            }
        }
        Ok(out)
    }

    /// Largest entry magnitude.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-norm of `self - rhs`; shapes must match.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Eigenpairs of a Hermitian matrix: real eigenvalues in non-increasing
/// order, matching eigenvector columns, orthonormal.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

/// Orthonormal basis of a principal subspace plus the retained eigenvalues
/// of the Gram matrix, in non-increasing order.
#[derive(Debug, Clone)]
pub struct PrincipalSubspace {
    basis: ComplexMatrix,
    eigenvalues: Vec<f64>,
}

impl PrincipalSubspace {
    pub(crate) fn from_parts(basis: ComplexMatrix, eigenvalues: Vec<f64>) -> Self {
        Self { basis, eigenvalues }
    }

    /// The `p x k` orthonormal basis.
    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Ambient dimension p.
    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// Number of retained components.
    pub fn components(&self) -> usize {
        self.basis.cols()
    }

    /// Projection coefficients `B^H z`.
    pub fn coefficients(&self, z: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        self.basis.herm_mul_vec(z)
    }

    /// Reconstruction `B c` from coefficients.
    pub fn synthesize(&self, coefficients: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        self.basis.mul_vec(coefficients)
    }

    /// Orthogonal projection `B B^H z` in one call.
    pub fn project(&self, z: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        self.synthesize(&self.coefficients(z)?)
    }
}

/// Eigenvalues above `n * eps * lambda_max` count toward the numerical rank.
pub fn numerical_rank(eigenvalues: &[f64], n: usize) -> usize {
    let lambda_max = eigenvalues.iter().cloned().fold(0.0, f64::max);
    if lambda_max <= 0.0 {
        return 0;
    }
    let cutoff = n as f64 * f64::EPSILON * lambda_max;
    eigenvalues.iter().filter(|&&l| l > cutoff).count()
}

/// Gram matrix `Z^H Z`, serial reference implementation.
///
/// Per-entry accumulation runs over the rows of `Z` in ascending order, so
/// the result is bit-identical to [`gram_par`].
pub fn gram(z: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    check_nonempty(z)?;
    let n = z.cols();
    let mut t = ComplexMatrix::zeros(n, n);
    for k in 0..z.rows() {
        let row = z.row(k);
        for i in 0..n {
            let zi = row[i].conj();
            for (j, &zj) in row.iter().enumerate() {
                let v = t.get(i, j) + zi * zj;
                t.set(i, j, v);
            }
        }
    }
    Ok(t)
}

/// Gram matrix computed in parallel over output entries.
///
/// Each entry is still a serial sum over rows in ascending order, so output
/// bits match [`gram`] exactly.
pub fn gram_par(z: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    check_nonempty(z)?;
    let n = z.cols();
    let p = z.rows();
    let data: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..p {
                acc += z.get(k, i).conj() * z.get(k, j);
            }
            acc
        })
        .collect();
    Ok(ComplexMatrix {
        rows: n,
        cols: n,
        data,
    })
}

fn check_nonempty(z: &ComplexMatrix) -> Result<(), LinalgError> {
    if z.rows() == 0 || z.cols() == 0 {
        return Err(LinalgError::Dimension {
            expected: "non-empty matrix".into(),
            got: format!("{}x{}", z.rows(), z.cols()),
        });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// Convergence is reached when the largest off-diagonal magnitude drops to
/// `tol` times the Frobenius norm of the input (which is invariant under the
/// rotations). Eigenvalues are returned in non-increasing order; ties keep
/// the order the diagonalization produced them in. Each eigenvector is
/// scaled by a unit-modulus factor so that its largest-magnitude entry is
/// real and positive, which makes repeated runs and independently computed
/// decompositions directly comparable.
pub fn hermitian_eig(m: &ComplexMatrix, tol: f64) -> Result<EigenDecomposition, LinalgError> {
    if !m.is_square() || m.rows() == 0 {
        return Err(LinalgError::Dimension {
            expected: "square non-empty matrix".into(),
            got: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    m.check_finite()?;
    let n = m.rows();
    let norm_max = m.norm_max();
    let herm_dev = m.max_abs_diff(&m.conj_transpose());
    if herm_dev > HERMITIAN_TOL * norm_max.max(f64::MIN_POSITIVE) {
        return Err(LinalgError::NotHermitian {
            deviation: herm_dev,
        });
    }

    let mut a = m.clone();
    // Fold round-off asymmetry into an exactly Hermitian working copy.
    for i in 0..n {
        a.set(i, i, Complex64::new(a.get(i, i).re, 0.0));
        for j in (i + 1)..n {
            let avg = (a.get(i, j) + a.get(j, i).conj()) * 0.5;
            a.set(i, j, avg);
            a.set(j, i, avg.conj());
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let fro = a.norm_fro();
    let threshold = tol * fro;

    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        let mut off_max = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off_max = off_max.max(a.get(i, j).norm());
            }
        }
        if off_max <= threshold {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        let mut off_max = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off_max = off_max.max(a.get(i, j).norm());
            }
        }
        if off_max > threshold {
            return Err(LinalgError::NoConvergence(MAX_SWEEPS));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    // Stable sort keeps the Jacobi output order for equal eigenvalues.
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    for j in 0..n {
        canonicalize_column(&mut eigenvectors, j);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let r = apq.norm();
    if r < f64::MIN_POSITIVE {
        return;
    }
    let phase = apq / r;
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    // Same angle selection as the real symmetric case applied to the
    // phase-aligned 2x2 block [[app, r], [r, aqq]].
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.rows();

    // A <- A U with U_pp = c, U_pq = s*phase, U_qp = -s*conj(phase), U_qq = c.
    for j in 0..n {
        let ajp = a.get(j, p);
        let ajq = a.get(j, q);
        a.set(j, p, c * ajp - s * phase.conj() * ajq);
        a.set(j, q, s * phase * ajp + c * ajq);
    }
    // A <- U^H A.
    for j in 0..n {
        let apj = a.get(p, j);
        let aqj = a.get(q, j);
        a.set(p, j, c * apj - s * phase * aqj);
        a.set(q, j, s * phase.conj() * apj + c * aqj);
    }
    // The rotation zeroes (p, q) by construction; pin it and keep the
    // diagonal exactly real.
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));
    a.set(p, p, Complex64::new(a.get(p, p).re, 0.0));
    a.set(q, q, Complex64::new(a.get(q, q).re, 0.0));

    for j in 0..n {
        let vjp = v.get(j, p);
        let vjq = v.get(j, q);
        v.set(j, p, c * vjp - s * phase.conj() * vjq);
        v.set(j, q, s * phase * vjp + c * vjq);
    }
}

/// Multiplies column `j` by a unit-modulus factor so its largest-magnitude
/// entry becomes real and positive.
fn canonicalize_column(m: &mut ComplexMatrix, j: usize) {
    let mut best = 0usize;
    let mut best_norm = 0.0f64;
    for i in 0..m.rows() {
        let norm = m.get(i, j).norm();
        if norm > best_norm {
            best_norm = norm;
            best = i;
        }
    }
    if best_norm < f64::MIN_POSITIVE {
        return;
    }
    let factor = m.get(best, j).conj() / best_norm;
    for i in 0..m.rows() {
        let v = m.get(i, j) * factor;
        m.set(i, j, v);
    }
}

/// Principal subspace of `Z in C^{p x n}` via the Gram matrix `T = Z^H Z`.
///
/// Returns `B_k = Z U_k L_k^{-1/2}` where `(U, L)` are the top-k eigenpairs
/// of `T`. The columns of `B_k` are orthonormal and the retained eigenvalues
/// equal the top-k nonzero eigenvalues of `Z Z^H`.
pub fn snapshot_pca(z: &ComplexMatrix, k: usize) -> Result<PrincipalSubspace, LinalgError> {
    snapshot_pca_with(z, k, Parallelism::Serial)
}

/// [`snapshot_pca`] with an explicit execution mode for the Gram product.
pub fn snapshot_pca_with(
    z: &ComplexMatrix,
    k: usize,
    mode: Parallelism,
) -> Result<PrincipalSubspace, LinalgError> {
    if k == 0 {
        return Err(LinalgError::ZeroComponents);
    }
    let t = match mode {
        Parallelism::Serial => gram(z)?,
        Parallelism::Rayon => gram_par(z)?,
    };
    let eig = hermitian_eig(&t, DEFAULT_EIG_TOL)?;
    let rank = numerical_rank(&eig.eigenvalues, t.rows());
    if k > rank {
        return Err(LinalgError::RankExceeded { requested: k, rank });
    }
    let p = z.rows();
    let mut basis = ComplexMatrix::zeros(p, k);
    for j in 0..k {
        let scale = 1.0 / eig.eigenvalues[j].sqrt();
        let u = eig.eigenvectors.column(j);
        let col = z.mul_vec(&u)?;
        for (i, value) in col.into_iter().enumerate() {
            basis.set(i, j, value * scale);
        }
    }
    Ok(PrincipalSubspace {
        basis,
        eigenvalues: eig.eigenvalues[..k].to_vec(),
    })
}

/// Execution mode for operations with a parallel path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    /// Bit-reproducibility reference.
    Serial,
    /// Rayon thread pool; bit-identical to serial for the operations here.
    #[default]
    Rayon,
}
