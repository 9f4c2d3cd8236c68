//! Dense numeric kernel: matrices, activations, Adam and a finite-difference
//! gradient checker.
//!
//! All randomness in the crate flows through [`seeded_rng`], a ChaCha8 stream
//! cipher generator, so results are reproducible across platforms for a given
//! seed.

mod activation;
mod adam;
mod gradcheck;
mod matrix;

pub use activation::{relu, relu_grad, sigmoid, sigmoid_vec};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{grad_check, relative_error, GradCheckReport, GRAD_CHECK_FLOOR};
pub use matrix::{dot, Matrix};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng64 = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Glorot/Xavier uniform initialization in ±sqrt(6 / (fan_in + fan_out)).
pub fn xavier_uniform(rows: usize, cols: usize, rng: &mut Rng64) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-limit..=limit))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("length matches by construction")
}

/// Matrix with entries uniform in `[-scale, scale]`.
pub fn uniform(rows: usize, cols: usize, scale: f64, rng: &mut Rng64) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-scale..=scale))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("length matches by construction")
}
