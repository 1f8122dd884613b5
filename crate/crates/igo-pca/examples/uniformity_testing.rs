//! Orientation differences of unrelated images behave like uniform noise.
//!
//! The one-sample Kolmogorov-Smirnov test checks per-pixel orientation
//! differences against U[0, 2*pi). Unrelated pairs pass at significance
//! 0.01; shifted or identical pairs fail decisively. The same machinery
//! doubles as a quality check of the built-in seeded generator.
//!
//! Run with: cargo run --release -p igo-pca --example uniformity_testing

use igo_pca::commands::kstest_synthetic;
use igo_pca::linalg::Parallelism;
use igo_pca::stats::{dissimilarity_test, ks_uniform_test, random_orientation_image, SplitMix64};
use igo_pca::OrientationImage;

fn main() {
    let alpha = 0.01;

    // Two unrelated random orientation images: differences are uniform.
    let a = random_orientation_image(100, 100, 1);
    let b = random_orientation_image(100, 100, 2);
    let unrelated = dissimilarity_test(&a, &b, alpha).expect("test");
    println!(
        "unrelated pair: D = {:.4}, p = {:.3}, accepted = {}",
        unrelated.statistic, unrelated.p_value, unrelated.accepted
    );

    // A constant offset concentrates the differences at one angle.
    let shifted: Vec<f64> = a.angles().iter().map(|&x| x + 1.0).collect();
    let c = OrientationImage::new(100, 100, shifted, vec![true; 10_000]).unwrap();
    let offset = dissimilarity_test(&a, &c, alpha).expect("test");
    println!(
        "offset pair:    D = {:.4}, p = {:.3e}, accepted = {}",
        offset.statistic, offset.p_value, offset.accepted
    );

    // Generator control: draws straight from the seeded generator should
    // pass almost always, with p-values spread evenly over [0, 1].
    let mut rng = SplitMix64::new(42);
    let samples: Vec<f64> = (0..10_000).map(|_| rng.next_angle()).collect();
    let direct = ks_uniform_test(&samples, alpha).expect("test");
    println!(
        "raw generator:  D = {:.4}, p = {:.3}, accepted = {}",
        direct.statistic, direct.p_value, direct.accepted
    );

    // The full control experiment: many seeded trials.
    let summary = kstest_synthetic(200, 100, 100, 42, alpha, Parallelism::Rayon).expect("trials");
    println!(
        "{} trials: acceptance rate {:.3}, mean p-value {:.3}",
        summary.rows.len(),
        summary.acceptance_rate,
        summary.mean_p_value
    );
}
