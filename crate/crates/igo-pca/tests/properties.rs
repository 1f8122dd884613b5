//! Property tests over the kernel algebra and the snapshot identities.

use igo_pca::linalg::{self, ComplexMatrix};
use igo_pca::orientation::{
    chord, cosine_distance, cosine_kernel, cosine_kernel_masked, embed, orientation_difference,
    wrap_angle, OrientationImage,
};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn angles(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0..TAU, len)
}

fn orientation_pair(side: usize) -> impl Strategy<Value = (OrientationImage, OrientationImage)> {
    let p = side * side;
    (angles(p), angles(p)).prop_map(move |(a, b)| {
        (
            OrientationImage::new(side, side, a, vec![true; p]).unwrap(),
            OrientationImage::new(side, side, b, vec![true; p]).unwrap(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wrap_stays_in_range(x in -1e6f64..1e6) {
        let y = wrap_angle(x);
        prop_assert!((0.0..TAU).contains(&y));
        // wrapping again is a no-op
        prop_assert_eq!(wrap_angle(y).to_bits(), y.to_bits());
    }

    #[test]
    fn kernel_is_symmetric_and_bounded((a, b) in orientation_pair(6)) {
        let ab = cosine_kernel(&a, &b).unwrap();
        let ba = cosine_kernel(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(ab.abs() <= a.pixel_count() as f64 + 1e-9);
    }

    #[test]
    fn kernel_adds_over_any_partition(
        (a, b) in orientation_pair(6),
        split in proptest::collection::vec(any::<bool>(), 36),
    ) {
        let complement: Vec<bool> = split.iter().map(|&v| !v).collect();
        let total = cosine_kernel(&a, &b).unwrap();
        let s1 = cosine_kernel_masked(&a, &b, &split).unwrap();
        let s2 = cosine_kernel_masked(&a, &b, &complement).unwrap();
        prop_assert!((total - (s1 + s2)).abs() <= 1e-10);
    }

    #[test]
    fn distance_is_bounded_and_matches_kernel((a, b) in orientation_pair(6)) {
        let p = a.pixel_count() as f64;
        let d2 = cosine_distance(&a, &b).unwrap();
        prop_assert!((-1e-12..=2.0 * p + 1e-9).contains(&d2));
        let via_kernel = p - cosine_kernel(&a, &b).unwrap();
        prop_assert!((d2 - via_kernel).abs() <= 1e-9);
    }

    #[test]
    fn chord_squared_tracks_distance((a, b) in orientation_pair(6)) {
        let d2 = cosine_distance(&a, &b).unwrap();
        let crd = chord(&embed(&a), &embed(&b)).unwrap();
        prop_assert!((crd * crd - 2.0 * d2).abs() <= 1e-10 * (2.0 * d2).max(1.0));
    }

    #[test]
    fn distinct_images_have_positive_chord((a, b) in orientation_pair(4)) {
        let differ = a.angles().iter().zip(b.angles()).any(|(x, y)| x != y);
        if differ {
            prop_assert!(chord(&embed(&a), &embed(&b)).unwrap() > 0.0);
        }
    }

    #[test]
    fn difference_wraps_into_range((a, b) in orientation_pair(5)) {
        let d = orientation_difference(&a, &b).unwrap();
        for &x in d.angles() {
            prop_assert!((0.0..TAU).contains(&x));
        }
    }

    #[test]
    fn gram_eigenvalues_are_nonnegative(
        entries in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 24),
    ) {
        let data: Vec<Complex64> = entries.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let z = ComplexMatrix::from_vec(8, 3, data).unwrap();
        let t = linalg::gram(&z).unwrap();
        let eig = linalg::hermitian_eig(&t, linalg::DEFAULT_EIG_TOL).unwrap();
        let floor = -1e-10 * t.norm_fro();
        for &l in &eig.eigenvalues {
            prop_assert!(l >= floor);
        }
    }

    #[test]
    fn small_gram_products_share_eigenvalues(
        entries in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4 * 16),
        n in 1usize..=4,
        p in 4usize..=16,
    ) {
        let data: Vec<Complex64> = entries[..p * n]
            .iter()
            .map(|&(re, im)| Complex64::new(re, im))
            .collect();
        let gamma = ComplexMatrix::from_vec(p, n, data).unwrap();
        let small = linalg::hermitian_eig(&linalg::gram(&gamma).unwrap(), linalg::DEFAULT_EIG_TOL)
            .unwrap();
        let outer = gamma.mul(&gamma.conj_transpose()).unwrap();
        let big = linalg::hermitian_eig(&outer, linalg::DEFAULT_EIG_TOL).unwrap();
        let rank = linalg::numerical_rank(&small.eigenvalues, n);
        for i in 0..rank {
            let (a, b) = (big.eigenvalues[i], small.eigenvalues[i]);
            prop_assert!((a - b).abs() <= 1e-10 * b.max(1.0), "{} vs {}", a, b);
        }
    }
}
