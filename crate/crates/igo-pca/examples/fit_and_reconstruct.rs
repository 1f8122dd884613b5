//! Core workflow: gradient orientations, subspace fit, reconstruction.
//!
//! Builds a small synthetic dataset, extracts orientation images, fits the
//! orientation-domain PCA model and reconstructs a held-out image through
//! the subspace.
//!
//! Run with: cargo run --release -p igo-pca --example fit_and_reconstruct

use igo_pca::orientation::{compute_orientation, cosine_distance, DEFAULT_MAGNITUDE_FLOOR};
use igo_pca::synth::{synthesize, CorruptionMode, SynthConfig};
use igo_pca::{GradientFilterSpec, IgoModel};

fn main() {
    let config = SynthConfig {
        n: 20,
        height: 64,
        width: 64,
        rank: 3,
        mode: CorruptionMode::None,
        fraction: 0.0,
        patch: 21,
        seed: 7,
    };
    let dataset = synthesize(config).expect("synthesis");

    // Per-pixel gradient orientation in [0, 2*pi), with a validity mask for
    // pixels whose gradient magnitude is too small to carry a direction.
    let orientations: Vec<_> = dataset
        .clean
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

    let (train, held_out) = orientations.split_at(19);
    let model = IgoModel::fit(train, 5).expect("fit");
    println!(
        "fitted k = {} components over {} images",
        model.components(),
        train.len()
    );
    println!(
        "eigenvalues: {:?}",
        model
            .eigenvalues()
            .iter()
            .map(|l| (l / 1000.0).round() * 1000.0)
            .collect::<Vec<_>>()
    );

    let query = &held_out[0];
    let rebuilt = model.reconstruct(query).expect("reconstruct");
    let p = query.pixel_count() as f64;
    let d2 = cosine_distance(query, &rebuilt).expect("distance");
    println!(
        "held-out reconstruction error d2/p = {:.5} (0 = identical, 2 = antipodal)",
        d2 / p
    );

    // Training images project almost onto themselves.
    let d2_train = cosine_distance(&train[0], &model.reconstruct(&train[0]).unwrap()).unwrap();
    println!("training reconstruction error d2/p = {:.5}", d2_train / p);
}
