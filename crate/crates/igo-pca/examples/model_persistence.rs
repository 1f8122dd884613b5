//! Saving and loading fitted models, bit for bit.
//!
//! Models persist in a small binary container (magic, version, UTF-8
//! metadata, little-endian f64 payload). Writes are atomic and the round
//! trip is exact: every stored float compares equal at the bit level.
//!
//! Run with: cargo run --release -p igo-pca --example model_persistence

use igo_pca::io::{load_model, save_model, Model};
use igo_pca::stats::random_orientation_image;
use igo_pca::IgoModel;

fn main() {
    let images: Vec<_> = (0..6)
        .map(|s| random_orientation_image(48, 48, 20 + s))
        .collect();
    let model = IgoModel::fit(&images, 4).expect("fit");

    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("subspace.igo");
    save_model(&Model::Igo(model.clone()), &path).expect("save");
    let bytes = std::fs::metadata(&path).expect("metadata").len();
    println!(
        "saved {} components to {} ({} bytes)",
        model.components(),
        path.display(),
        bytes
    );

    let Model::Igo(loaded) = load_model(&path).expect("load") else {
        panic!("wrong model kind");
    };

    let basis = model.subspace().basis();
    let loaded_basis = loaded.subspace().basis();
    let mut identical = true;
    for j in 0..basis.cols() {
        for i in 0..basis.rows() {
            let (a, b) = (basis.get(i, j), loaded_basis.get(i, j));
            identical &= a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits();
        }
    }
    identical &= model
        .eigenvalues()
        .iter()
        .zip(loaded.eigenvalues())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    println!("round trip bit-exact: {identical}");

    // Reconstructions through the loaded model match the original exactly.
    let query = random_orientation_image(48, 48, 99);
    let original = model.reconstruct(&query).expect("reconstruct");
    let reloaded = loaded.reconstruct(&query).expect("reconstruct");
    let same = original
        .angles()
        .iter()
        .zip(reloaded.angles())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    println!("reconstructions identical: {same}");
}
