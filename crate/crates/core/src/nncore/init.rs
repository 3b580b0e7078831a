use ndarray::{Array1, Array2};
use rand::Rng;

use super::{AffineParams, GruParams};
use crate::rng_from_seed;

fn uniform(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    let s = 1.0 / (cols as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-s..s))
}

fn gru(rng: &mut impl Rng, input_dim: usize, hidden_dim: usize) -> GruParams {
    GruParams {
        w_z: uniform(rng, hidden_dim, input_dim),
        w_r: uniform(rng, hidden_dim, input_dim),
        w_h: uniform(rng, hidden_dim, input_dim),
        u_z: uniform(rng, hidden_dim, hidden_dim),
        u_r: uniform(rng, hidden_dim, hidden_dim),
        u_h: uniform(rng, hidden_dim, hidden_dim),
        b_z: Array1::zeros(hidden_dim),
        b_r: Array1::zeros(hidden_dim),
        b_h: Array1::zeros(hidden_dim),
    }
}

/// Encoder GRU, decoder GRU and readout for an autoencoder with input size
/// `input_dim`, hidden size `hidden_dim` and output size `output_dim`.
///
/// Weights are `Uniform(-s, s)` with `s = 1/sqrt(fan_in)`; biases are zero.
pub fn init_params(
    input_dim: usize,
    hidden_dim: usize,
    output_dim: usize,
    seed: u64,
) -> (GruParams, GruParams, AffineParams) {
    let mut rng = rng_from_seed(seed);
    let enc = gru(&mut rng, input_dim, hidden_dim);
    let dec = gru(&mut rng, input_dim, hidden_dim);
    let out = AffineParams {
        w_o: uniform(&mut rng, output_dim, hidden_dim),
        b_o: Array1::zeros(output_dim),
    };
    (enc, dec, out)
}
