//! Extra-class outliers occupy their own subspace axis.
//!
//! When several training images are the same foreign texture, their shared
//! embedding sums coherently into one eigenvector of the full-rank fit; the
//! remaining components stay free of it. Dropping that axis removes the
//! outlier from the model without touching the inlier reconstructions.
//!
//! Run with: cargo run --release -p igo-pca --example outlier_separation

use igo_pca::igo::embedding_spectrum;
use igo_pca::linalg::numerical_rank;
use igo_pca::orientation::{compute_orientation, DEFAULT_MAGNITUDE_FLOOR};
use igo_pca::synth::{synthesize, CorruptionMode, SynthConfig};
use igo_pca::{GradientFilterSpec, IgoModel};

fn main() {
    let config = SynthConfig {
        n: 30,
        height: 96,
        width: 96,
        rank: 3,
        mode: CorruptionMode::Replacement,
        fraction: 0.2,
        patch: 31,
        seed: 9,
    };
    let dataset = synthesize(config).expect("synthesis");
    let replaced = dataset.corrupted_indices();
    println!(
        "{} of {} images replaced by one fixed texture image",
        replaced.len(),
        config.n
    );

    let orientations: Vec<_> = dataset
        .corrupted
        .iter()
        .map(|img| {
            compute_orientation(
                img,
                GradientFilterSpec::CentralDifference,
                DEFAULT_MAGNITUDE_FLOOR,
            )
            .expect("orientation")
        })
        .collect();

    // Identical replaced images collapse to one direction, so the numerical
    // rank is n minus the duplicates.
    let spectrum = embedding_spectrum(&orientations).expect("spectrum");
    let rank = numerical_rank(&spectrum, orientations.len());
    println!("embedding rank: {rank} (n = {})", orientations.len());

    let model = IgoModel::fit(&orientations, rank).expect("fit");
    let axis = model
        .outlier_axis(&orientations, replaced[0])
        .expect("axis");
    println!(
        "outlier axis: component {} with alignment {:.4} (found = {})",
        axis.component, axis.alignment, axis.found
    );

    // The replicated outlier owns the top eigenvalue: roughly
    // (copies * pixel_count), far above the flat bulk.
    let p = (config.height * config.width) as f64;
    println!(
        "top eigenvalue: {:.1} * p, next: {:.1} * p",
        model.eigenvalues()[0] / p,
        model.eigenvalues()[1] / p
    );

    // Inliers barely project onto the outlier axis.
    let inlier = (0..config.n).find(|i| !replaced.contains(i)).unwrap();
    let inlier_axis = model.outlier_axis(&orientations, inlier).expect("axis");
    println!(
        "inlier {} alignment with its best axis: {:.4} (found = {})",
        inlier, inlier_axis.alignment, inlier_axis.found
    );
}
