//! Deterministic inputs shared by the benches.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sympl::channels::{random_cp_channel, GaussianChannel};
use sympl::symplectic::{random_symplectic, SymplecticMatrix};

pub fn symplectic(n_modes: usize) -> SymplecticMatrix {
    random_symplectic(n_modes, 0xbe4c, 2.0).expect("valid arguments")
}

/// A mixed state `S diag(ν) Sᵗ` with distinct symplectic eigenvalues.
pub fn covariance(n_modes: usize) -> DMatrix<f64> {
    let s = symplectic(n_modes).interleaved();
    let nu: Vec<f64> = (0..n_modes)
        .flat_map(|j| [1.5 + j as f64, 1.5 + j as f64])
        .collect();
    &s * DMatrix::from_diagonal(&DVector::from_vec(nu)) * s.transpose()
}

pub fn channel(n_modes: usize) -> GaussianChannel {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd11a);
    random_cp_channel(n_modes, 0.1, &mut rng).expect("valid arguments")
}
