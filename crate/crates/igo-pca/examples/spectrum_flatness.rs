//! Mutually dissimilar images produce a flat eigen-spectrum.
//!
//! If every pair of images has uniform orientation differences, the Gram
//! matrix of their embeddings is close to p times the identity: every
//! eigenvalue lands near the pixel count and no direction is preferred.
//! Structured data breaks the flatness immediately.
//!
//! Run with: cargo run --release -p igo-pca --example spectrum_flatness

use igo_pca::commands::spectrum_of;
use igo_pca::stats::random_orientation_image;

fn main() {
    // 20 independent random orientation images, p = 40,000.
    let images: Vec<_> = (0..20)
        .map(|s| random_orientation_image(200, 200, s))
        .collect();
    let outcome = spectrum_of(&images).expect("spectrum");
    println!("random images, normalized eigenvalues (lambda / p):");
    for (i, l) in outcome.normalized.iter().enumerate() {
        println!("  {:>2}: {:.4}", i, l);
    }
    println!("flatness (max deviation from 1): {:.4}", outcome.flatness);

    // A coherent dataset concentrates all energy in one component.
    let repeated = vec![random_orientation_image(200, 200, 99); 20];
    let coherent = spectrum_of(&repeated).expect("spectrum");
    println!(
        "\n20 copies of one image: lambda_1 / p = {:.1}, lambda_2 / p = {:.2e}, flatness = {:.1}",
        coherent.normalized[0], coherent.normalized[1], coherent.flatness
    );
}
