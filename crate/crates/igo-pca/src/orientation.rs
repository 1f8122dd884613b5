//! Gradient orientation extraction and the complex-sphere embedding.
//!
//! An image is reduced to its per-pixel gradient orientation, the
//! four-quadrant angle of `(G_x, G_y)` in `[0, 2*pi)`. Pixels whose gradient
//! magnitude falls below a floor have no meaningful orientation; they carry
//! angle 0 and are flagged invalid in a per-pixel mask. Orientation images
//! compare through the cosine kernel `sum cos(delta phi)` and its induced
//! distance, which equals half the squared Euclidean distance between the
//! unit-modulus embeddings `z = exp(j * phi)`.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Default gradient magnitude below which a pixel has no orientation.
pub const DEFAULT_MAGNITUDE_FLOOR: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum OrientationError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("image must be at least 3x3, got {height}x{width}")]
    TooSmall { height: usize, width: usize },
    #[error("non-finite intensity at pixel {0}")]
    NonFinite(usize),
    #[error("invalid filter parameter: {0}")]
    InvalidFilter(String),
}

/// Grayscale image with real intensities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl GrayImage {
    /// Builds an image, rejecting sub-3x3 dimensions and non-finite values.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self, OrientationError> {
        if height < 3 || width < 3 {
            return Err(OrientationError::TooSmall { height, width });
        }
        if data.len() != height * width {
            return Err(OrientationError::Dimension(format!(
                "expected {} intensities, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(OrientationError::NonFinite(k));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, OrientationError> {
        let mut data = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel_count(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Intensity with replicate boundary handling for out-of-range indices.
    #[inline]
    fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.get(r, c)
    }
}

/// 1-D derivative filter applied along each image axis.
///
/// Both kinds produce zero-sum kernels: a constant image has zero gradient
/// everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientFilterSpec {
    /// Three-tap central difference `[-1/2, 0, 1/2]`.
    CentralDifference,
    /// Sampled derivative of a Gaussian with the given standard deviation;
    /// half-width `ceil(3 * sigma)`, mean-subtracted to enforce zero DC.
    GaussianDerivative { sigma: f64 },
}

impl GradientFilterSpec {
    pub fn central_difference() -> Self {
        Self::CentralDifference
    }

    pub fn gaussian_derivative(sigma: f64) -> Result<Self, OrientationError> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(OrientationError::InvalidFilter(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self::GaussianDerivative { sigma })
    }

    /// Half-width of the filter support.
    pub fn half_width(&self) -> usize {
        match self {
            Self::CentralDifference => 1,
            Self::GaussianDerivative { sigma } => (3.0 * sigma).ceil() as usize,
        }
    }

    /// Correlation taps, index 0 at offset `-half_width`.
    ///
    /// Taps are oriented so that an increasing ramp yields a positive
    /// response: the orientation of `I(row, col) = col` is 0.
    pub fn taps(&self) -> Vec<f64> {
        match self {
            Self::CentralDifference => vec![-0.5, 0.0, 0.5],
            Self::GaussianDerivative { sigma } => {
                let h = self.half_width() as isize;
                let norm = 1.0 / (sigma.powi(3) * (2.0 * PI).sqrt());
                let mut taps: Vec<f64> = (-h..=h)
                    .map(|i| {
                        let x = i as f64;
                        x * norm * (-x * x / (2.0 * sigma * sigma)).exp()
                    })
                    .collect();
                let mean = taps.iter().sum::<f64>() / taps.len() as f64;
                for t in &mut taps {
                    *t -= mean;
                }
                taps
            }
        }
    }
}

/// Per-pixel gradient orientation in `[0, 2*pi)` plus a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationImage {
    height: usize,
    width: usize,
    angles: Vec<f64>,
    valid: Vec<bool>,
}

impl OrientationImage {
    /// Builds an orientation image from raw angles, wrapping each into
    /// `[0, 2*pi)`.
    pub fn new(
        height: usize,
        width: usize,
        angles: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self, OrientationError> {
        if angles.len() != height * width || valid.len() != height * width {
            return Err(OrientationError::Dimension(format!(
                "expected {} angles and mask entries, got {} and {}",
                height * width,
                angles.len(),
                valid.len()
            )));
        }
        if let Some(k) = angles.iter().position(|v| !v.is_finite()) {
            return Err(OrientationError::NonFinite(k));
        }
        let angles = angles.into_iter().map(wrap_angle).collect();
        Ok(Self {
            height,
            width,
            angles,
            valid,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel_count(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn angle(&self, row: usize, col: usize) -> f64 {
        self.angles[row * self.width + col]
    }

    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.valid[row * self.width + col]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.height == other.height && self.width == other.width
    }

    fn require_same_shape(&self, other: &Self) -> Result<(), OrientationError> {
        if !self.same_shape(other) {
            return Err(OrientationError::Dimension(format!(
                "{}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }
}

/// Wraps an angle into `[0, 2*pi)`; values that round to exactly `2*pi`
/// collapse to 0.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x - TAU * (x / TAU).floor();
    if y >= TAU {
        y = 0.0;
    }
    y
}

/// Estimates the gradient orientation of every pixel.
///
/// `G_x` and `G_y` come from correlating the rows and columns with the
/// filter taps under replicate boundary handling. The angle is the
/// four-quadrant `atan2(G_y, G_x)` shifted into `[0, 2*pi)`; plain
/// `arctan(G_y / G_x)` would collapse opposite gradients onto the same
/// angle. Pixels with gradient magnitude at or below `magnitude_floor` get
/// angle 0 and a false mask entry.
pub fn compute_orientation(
    img: &GrayImage,
    filter: GradientFilterSpec,
    magnitude_floor: f64,
) -> Result<OrientationImage, OrientationError> {
    if magnitude_floor.is_nan() || magnitude_floor < 0.0 {
        return Err(OrientationError::InvalidFilter(format!(
            "magnitude floor must be >= 0, got {magnitude_floor}"
        )));
    }
    let taps = filter.taps();
    let support = taps.len();
    if img.height() < support || img.width() < support {
        return Err(OrientationError::Dimension(format!(
            "image {}x{} smaller than filter support {}",
            img.height(),
            img.width(),
            support
        )));
    }
    let h = filter.half_width() as isize;
    let (m1, m2) = (img.height(), img.width());
    let mut angles = vec![0.0; m1 * m2];
    let mut valid = vec![false; m1 * m2];
    for row in 0..m1 {
        for col in 0..m2 {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for (t, &w) in taps.iter().enumerate() {
                let off = t as isize - h;
                gx += w * img.get_clamped(row as isize, col as isize + off);
                gy += w * img.get_clamped(row as isize + off, col as isize);
            }
            let k = row * m2 + col;
            if gx.hypot(gy) > magnitude_floor {
                angles[k] = wrap_angle(gy.atan2(gx));
                valid[k] = true;
            }
        }
    }
    Ok(OrientationImage {
        height: m1,
        width: m2,
        angles,
        valid,
    })
}

/// Per-pixel difference `a - b` wrapped into `[0, 2*pi)`; a pixel of the
/// result is valid when it is valid in both inputs.
pub fn orientation_difference(
    a: &OrientationImage,
    b: &OrientationImage,
) -> Result<OrientationImage, OrientationError> {
    a.require_same_shape(b)?;
    let angles = a
        .angles
        .iter()
        .zip(&b.angles)
        .map(|(x, y)| wrap_angle(x - y))
        .collect();
    let valid = a.valid.iter().zip(&b.valid).map(|(x, y)| x & y).collect();
    Ok(OrientationImage {
        height: a.height,
        width: a.width,
        angles,
        valid,
    })
}

/// Cosine kernel `sum_k cos(phi_a(k) - phi_b(k))` over the full raster.
///
/// Stored angles are used as-is; pixels without a defined orientation carry
/// angle 0, so two flat regions count as maximally similar.
pub fn cosine_kernel(a: &OrientationImage, b: &OrientationImage) -> Result<f64, OrientationError> {
    a.require_same_shape(b)?;
    Ok(a.angles
        .iter()
        .zip(&b.angles)
        .map(|(x, y)| (x - y).cos())
        .sum())
}

/// Cosine kernel restricted to the pixels selected by `region`.
pub fn cosine_kernel_masked(
    a: &OrientationImage,
    b: &OrientationImage,
    region: &[bool],
) -> Result<f64, OrientationError> {
    a.require_same_shape(b)?;
    if region.len() != a.pixel_count() {
        return Err(OrientationError::Dimension(format!(
            "region mask length {} does not match pixel count {}",
            region.len(),
            a.pixel_count()
        )));
    }
    Ok(a.angles
        .iter()
        .zip(&b.angles)
        .zip(region)
        .filter(|(_, &keep)| keep)
        .map(|((x, y), _)| (x - y).cos())
        .sum())
}

/// Squared orientation distance `d^2 = sum_k (1 - cos(delta phi(k)))`.
///
/// Ranges over `[0, 2p]` and equals half the squared Euclidean distance
/// between the complex embeddings.
pub fn cosine_distance(
    a: &OrientationImage,
    b: &OrientationImage,
) -> Result<f64, OrientationError> {
    a.require_same_shape(b)?;
    Ok(a.angles
        .iter()
        .zip(&b.angles)
        .map(|(x, y)| 1.0 - (x - y).cos())
        .sum())
}

/// Squared orientation distance over the pixels selected by `region`.
pub fn cosine_distance_masked(
    a: &OrientationImage,
    b: &OrientationImage,
    region: &[bool],
) -> Result<f64, OrientationError> {
    let count = region.iter().filter(|&&keep| keep).count() as f64;
    Ok(count - cosine_kernel_masked(a, b, region)?)
}

/// Unit-modulus complex embedding `z(k) = exp(j * phi(k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexEmbedding {
    values: Vec<Complex64>,
}

impl ComplexEmbedding {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.values
    }
}

/// Maps an orientation image onto the complex sphere of radius `sqrt(p)`.
///
/// The mapping is one-to-one on `[0, 2*pi)`: distinct orientation images
/// give distinct embeddings.
pub fn embed(phi: &OrientationImage) -> ComplexEmbedding {
    ComplexEmbedding {
        values: phi
            .angles
            .iter()
            .map(|&a| Complex64::new(a.cos(), a.sin()))
            .collect(),
    }
}

/// Returns to the orientation domain: per-entry four-quadrant angle of `z`.
///
/// Entries are not required to have unit modulus (projections do not).
/// Entries with modulus at or below `modulus_floor` keep angle 0 and are
/// marked invalid; their angle carries no information.
pub fn unembed(
    z: &[Complex64],
    height: usize,
    width: usize,
    modulus_floor: f64,
) -> Result<OrientationImage, OrientationError> {
    if z.len() != height * width {
        return Err(OrientationError::Dimension(format!(
            "expected {} values for {}x{}, got {}",
            height * width,
            height,
            width,
            z.len()
        )));
    }
    let mut angles = vec![0.0; z.len()];
    let mut valid = vec![false; z.len()];
    for (k, v) in z.iter().enumerate() {
        if v.norm() > modulus_floor {
            angles[k] = wrap_angle(v.im.atan2(v.re));
            valid[k] = true;
        }
    }
    Ok(OrientationImage {
        height,
        width,
        angles,
        valid,
    })
}

/// Euclidean distance between two embeddings (the chord of the complex
/// sphere). Satisfies `chord^2 = 2 * d^2` against [`cosine_distance`].
pub fn chord(za: &ComplexEmbedding, zb: &ComplexEmbedding) -> Result<f64, OrientationError> {
    if za.len() != zb.len() {
        return Err(OrientationError::Dimension(format!(
            "embedding lengths {} vs {}",
            za.len(),
            zb.len()
        )));
    }
    Ok(za
        .values
        .iter()
        .zip(&zb.values)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} != {b} (tol {tol})");
    }

    fn uniform_random_orientation(height: usize, width: usize, seed: u64) -> OrientationImage {
        // small local generator; the stats module owns the public one
        let mut state = seed.wrapping_add(0x9E3779B97F4A7C15);
        let mut next = move || {
            let mut z = state;
            state = state.wrapping_add(0x9E3779B97F4A7C15);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64
        };
        let p = height * width;
        let angles = (0..p).map(|_| next() * TAU).collect();
        OrientationImage::new(height, width, angles, vec![true; p]).unwrap()
    }

    #[test]
    fn constant_image_has_no_orientation() {
        let img = GrayImage::from_fn(5, 5, |_, _| 0.7).unwrap();
        let phi = compute_orientation(
            &img,
            GradientFilterSpec::CentralDifference,
            DEFAULT_MAGNITUDE_FLOOR,
        )
        .unwrap();
        assert!(phi.valid_mask().iter().all(|&v| !v));
        assert!(phi.angles().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn horizontal_ramp_points_along_zero() {
        let img = GrayImage::from_fn(6, 6, |_, col| col as f64).unwrap();
        let phi = compute_orientation(
            &img,
            GradientFilterSpec::CentralDifference,
            DEFAULT_MAGNITUDE_FLOOR,
        )
        .unwrap();
        for row in 1..5 {
            for col in 1..5 {
                assert!(phi.is_valid(row, col));
                approx(phi.angle(row, col), 0.0, 1e-14);
            }
        }
    }

    #[test]
    fn vertical_ramp_points_along_half_pi() {
        let img = GrayImage::from_fn(6, 6, |row, _| row as f64).unwrap();
        let phi = compute_orientation(
            &img,
            GradientFilterSpec::CentralDifference,
            DEFAULT_MAGNITUDE_FLOOR,
        )
        .unwrap();
        for row in 1..5 {
            for col in 1..5 {
                approx(phi.angle(row, col), PI / 2.0, 1e-14);
            }
        }
    }

    #[test]
    fn gaussian_derivative_taps_sum_to_zero_and_match_ramp() {
        let filter = GradientFilterSpec::gaussian_derivative(1.2).unwrap();
        let taps = filter.taps();
        assert_eq!(taps.len(), 2 * filter.half_width() + 1);
        approx(taps.iter().sum::<f64>(), 0.0, 1e-15);
        let img = GrayImage::from_fn(11, 11, |_, col| col as f64).unwrap();
        let phi = compute_orientation(&img, filter, DEFAULT_MAGNITUDE_FLOOR).unwrap();
        approx(phi.angle(5, 5), 0.0, 1e-12);
    }

    #[test]
    fn image_smaller_than_support_is_rejected() {
        let img = GrayImage::from_fn(3, 3, |r, c| (r + c) as f64).unwrap();
        let filter = GradientFilterSpec::gaussian_derivative(2.0).unwrap();
        assert!(matches!(
            compute_orientation(&img, filter, 0.0),
            Err(OrientationError::Dimension(_))
        ));
    }

    #[test]
    fn difference_of_image_with_itself_is_zero() {
        let a = uniform_random_orientation(4, 4, 3);
        let d = orientation_difference(&a, &a).unwrap();
        assert!(d.angles().iter().all(|&x| x == 0.0));
        assert!(d.valid_mask().iter().all(|&v| v));
    }

    #[test]
    fn difference_wraps_into_range() {
        let a = OrientationImage::new(3, 3, vec![PI / 4.0; 9], vec![true; 9]).unwrap();
        let b = OrientationImage::new(3, 3, vec![3.0 * PI / 2.0; 9], vec![true; 9]).unwrap();
        let d = orientation_difference(&a, &b).unwrap();
        approx(d.angle(0, 0), 3.0 * PI / 4.0, 1e-14);
    }

    #[test]
    fn difference_matches_complex_division_oracle() {
        let a = uniform_random_orientation(8, 8, 11);
        let b = uniform_random_orientation(8, 8, 12);
        let d = orientation_difference(&a, &b).unwrap();
        let za = embed(&a);
        let zb = embed(&b);
        for k in 0..64 {
            let ratio = za.as_slice()[k] / zb.as_slice()[k];
            let oracle = wrap_angle(ratio.im.atan2(ratio.re));
            let gap = wrap_angle(d.angles()[k] - oracle);
            let gap = gap.min(TAU - gap);
            assert!(gap <= 1e-12, "pixel {k}: {} vs {}", d.angles()[k], oracle);
        }
    }

    #[test]
    fn kernel_of_identical_images_is_pixel_count() {
        let a = uniform_random_orientation(5, 5, 1);
        approx(cosine_kernel(&a, &a).unwrap(), 25.0, 1e-12);
    }

    #[test]
    fn kernel_of_antipodal_images_is_negative_pixel_count() {
        let a = uniform_random_orientation(5, 5, 2);
        let shifted: Vec<f64> = a.angles().iter().map(|&x| x + PI).collect();
        let b = OrientationImage::new(5, 5, shifted, vec![true; 25]).unwrap();
        approx(cosine_kernel(&a, &b).unwrap(), -25.0, 1e-12);
    }

    #[test]
    fn kernel_hand_summable_case() {
        let a = OrientationImage::new(3, 1, vec![0.0, PI / 2.0, PI], vec![true; 3]).unwrap();
        let b = OrientationImage::new(3, 1, vec![0.0, 0.0, 0.0], vec![true; 3]).unwrap();
        approx(cosine_kernel(&a, &b).unwrap(), 0.0, 1e-15);
    }

    #[test]
    fn masked_kernel_adds_over_partition() {
        let a = uniform_random_orientation(6, 6, 5);
        let b = uniform_random_orientation(6, 6, 6);
        let p = a.pixel_count();
        let left: Vec<bool> = (0..p).map(|k| k % 3 == 0).collect();
        let right: Vec<bool> = left.iter().map(|&v| !v).collect();
        let total = cosine_kernel(&a, &b).unwrap();
        let s1 = cosine_kernel_masked(&a, &b, &left).unwrap();
        let s2 = cosine_kernel_masked(&a, &b, &right).unwrap();
        approx(total, s1 + s2, 1e-10);
    }

    #[test]
    fn distance_identity_and_maximum() {
        let a = uniform_random_orientation(4, 4, 7);
        approx(cosine_distance(&a, &a).unwrap(), 0.0, 1e-15);
        let shifted: Vec<f64> = a.angles().iter().map(|&x| x + PI).collect();
        let b = OrientationImage::new(4, 4, shifted, vec![true; 16]).unwrap();
        approx(cosine_distance(&a, &b).unwrap(), 32.0, 1e-12);
    }

    #[test]
    fn distance_agrees_with_embedding_formula() {
        let a = uniform_random_orientation(10, 10, 20);
        let b = uniform_random_orientation(10, 10, 21);
        let d2 = cosine_distance(&a, &b).unwrap();
        let za = embed(&a);
        let zb = embed(&b);
        let half_norm: f64 = 0.5
            * za.as_slice()
                .iter()
                .zip(zb.as_slice())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>();
        approx(d2, half_norm, 1e-12 * d2.max(1.0));
    }

    #[test]
    fn embed_of_cardinal_angles() {
        let phi = OrientationImage::new(3, 1, vec![0.0, PI / 2.0, PI], vec![true; 3]).unwrap();
        let z = embed(&phi);
        assert!((z.as_slice()[0] - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        assert!((z.as_slice()[1] - Complex64::new(0.0, 1.0)).norm() <= 1e-15);
        assert!((z.as_slice()[2] - Complex64::new(-1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn embeddings_have_unit_modulus() {
        let phi = uniform_random_orientation(9, 9, 77);
        for v in embed(&phi).as_slice() {
            assert!((v.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn embedding_inner_product_matches_angle_domain_kernel() {
        let a = uniform_random_orientation(9, 9, 30);
        let b = uniform_random_orientation(9, 9, 31);
        let za = embed(&a);
        let zb = embed(&b);
        let inner: Complex64 = za
            .as_slice()
            .iter()
            .zip(zb.as_slice())
            .map(|(x, y)| x.conj() * y)
            .sum();
        // z_a^H z_b has real part sum cos(phi_b - phi_a) = kernel(a, b)
        approx(inner.re, cosine_kernel(&a, &b).unwrap(), 1e-10);
    }

    #[test]
    fn unembed_round_trips_and_handles_quadrants() {
        let phi = uniform_random_orientation(7, 7, 40);
        let z = embed(&phi);
        let back = unembed(z.as_slice(), 7, 7, 0.0).unwrap();
        for k in 0..phi.pixel_count() {
            let gap = wrap_angle(back.angles()[k] - phi.angles()[k]);
            let gap = gap.min(TAU - gap);
            assert!(gap <= 1e-12);
            assert!(back.valid_mask()[k]);
        }
        let special = vec![
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, -1.0),
            Complex64::new(0.0, 0.0),
        ];
        let img = unembed(&special, 1, 3, 0.0).unwrap();
        approx(img.angles()[0], PI, 1e-15);
        approx(img.angles()[1], 7.0 * PI / 4.0, 1e-15);
        approx(img.angles()[2], 0.0, 0.0);
        assert!(!img.valid_mask()[2]);
    }

    #[test]
    fn chord_squared_is_twice_distance() {
        let a = uniform_random_orientation(8, 8, 50);
        let b = uniform_random_orientation(8, 8, 51);
        let crd = chord(&embed(&a), &embed(&b)).unwrap();
        let d2 = cosine_distance(&a, &b).unwrap();
        approx(crd * crd, 2.0 * d2, 1e-10 * (2.0 * d2).max(1.0));
        approx(chord(&embed(&a), &embed(&a)).unwrap(), 0.0, 1e-15);
        let shifted: Vec<f64> = a.angles().iter().map(|&x| x + PI).collect();
        let anti = OrientationImage::new(8, 8, shifted, vec![true; 64]).unwrap();
        approx(chord(&embed(&a), &embed(&anti)).unwrap(), 2.0 * 8.0, 1e-12);
    }

    #[test]
    fn wrap_angle_stays_in_range() {
        for &x in &[-1e-18, -7.0, 0.0, TAU, TAU - 1e-18, 13.0, -1e9, 1e9] {
            let y = wrap_angle(x);
            assert!((0.0..TAU).contains(&y), "wrap({x}) = {y}");
        }
        approx(wrap_angle(PI / 4.0 - 3.0 * PI / 2.0), 3.0 * PI / 4.0, 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = uniform_random_orientation(4, 4, 60);
        let b = uniform_random_orientation(4, 5, 61);
        assert!(orientation_difference(&a, &b).is_err());
        assert!(cosine_kernel(&a, &b).is_err());
        assert!(cosine_distance(&a, &b).is_err());
    }
}
