//! The snapshot trick: eigenpairs of a p x p problem from an n x n matrix.
//!
//! For a tall matrix Z (p pixels, n images, n << p) the nonzero eigenvalues
//! of Z Z^H and Z^H Z coincide, and the eigenvectors of the big matrix are
//! recovered as B = Z U L^{-1/2} from the small one. This example checks
//! both facts numerically on a random complex matrix.
//!
//! Run with: cargo run --release -p igo-pca --example snapshot_method

use igo_pca::linalg::{gram, hermitian_eig, snapshot_pca, ComplexMatrix, DEFAULT_EIG_TOL};
use igo_pca::stats::SplitMix64;
use num_complex::Complex64;

fn main() {
    let (p, n) = (12, 4);
    let mut rng = SplitMix64::new(5);
    let z = ComplexMatrix::from_fn(p, n, |_, _| {
        Complex64::new(2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0)
    });

    // Small route: n x n Gram matrix.
    let small = hermitian_eig(&gram(&z).unwrap(), DEFAULT_EIG_TOL).expect("small eig");
    // Big route: p x p outer product, eigendecomposed directly.
    let outer = z.mul(&z.conj_transpose()).unwrap();
    let big = hermitian_eig(&outer, DEFAULT_EIG_TOL).expect("big eig");

    println!("nonzero eigenvalues ({}x{} vs {}x{} route):", n, n, p, p);
    for i in 0..n {
        println!(
            "  {:>10.6}  vs  {:>10.6}   (gap {:.2e})",
            small.eigenvalues[i],
            big.eigenvalues[i],
            (small.eigenvalues[i] - big.eigenvalues[i]).abs()
        );
    }
    let trailing = big.eigenvalues[n..]
        .iter()
        .map(|l| l.abs())
        .fold(0.0, f64::max);
    println!(
        "largest of the remaining {} eigenvalues: {:.2e}",
        p - n,
        trailing
    );

    // The reconstructed basis spans the same subspace as the directly
    // computed eigenvectors: compare the projectors.
    let subspace = snapshot_pca(&z, n).expect("snapshot");
    let b = subspace.basis();
    let projector_snapshot = b.mul(&b.conj_transpose()).unwrap();
    let u = ComplexMatrix::from_fn(p, n, |i, j| big.eigenvectors.get(i, j));
    let projector_direct = u.mul(&u.conj_transpose()).unwrap();
    println!(
        "projector difference between the two routes: {:.2e}",
        projector_snapshot.max_abs_diff(&projector_direct)
    );
}
