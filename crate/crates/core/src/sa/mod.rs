//! Sequence-to-sequence autoencoder with a historyless decoder.
//!
//! The encoder GRU reads a segment frame by frame from a zero state; its final
//! state is the embedding. The decoder GRU starts from that embedding and is
//! fed the zero vector at every step, so everything it reconstructs has to be
//! carried by the embedding.

mod checkpoint;
mod model;
mod train;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, CheckpointFile, CheckpointTensor, CHECKPOINT_VERSION,
    GRU_CONVENTION,
};
pub use model::{
    bptt, decode, encode, gradient_check, reconstruction_loss, Embedding, GradCheckReport,
    SaGradients, SaModel,
};
pub use train::{batch_gradients, fine_tune, mean_reconstruction_loss, train, TrainConfig};
