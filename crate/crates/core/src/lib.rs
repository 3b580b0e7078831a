//! Fixed-length acoustic word embeddings from a sequence-to-sequence
//! autoencoder with a historyless decoder.
//!
//! The crate covers the whole experimental loop: segment archives
//! ([`corpus`]), GRU numerics with exact backpropagation through time
//! ([`nncore`]), the autoencoder itself ([`sa`]), the partition-average
//! baseline ([`ne`]), query-by-example retrieval and MAP ([`retrieval`]),
//! representation diagnostics ([`analysis`]) and the experiment drivers used
//! by the `awelab` CLI ([`harness`]).

#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod ne;
pub mod nncore;
pub mod par;
pub mod retrieval;
pub mod sa;

pub use error::{Error, Result};

/// Default cap on segment length, in frames.
pub const DEFAULT_MAX_FRAMES: usize = 50;

/// Default acoustic feature dimension (MFCC + deltas + delta-deltas).
pub const DEFAULT_FEATURE_DIM: usize = 39;

pub(crate) fn rng_from_seed(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
