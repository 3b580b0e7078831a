//! Diagnostics on learned representations: phoneme edit distance, cosine
//! similarity grouped by edit distance, word centroids and PCA projections of
//! centroid differences.

mod edit;
mod pca;
mod psed;

pub use edit::edit_distance;
pub use pca::{
    centroid_from_embeddings, pair_difference_vectors, pca_fit, word_centroid, PcaProjection,
    WordCentroid,
};
pub use psed::{psed_buckets, PsedBucket, PsedBucketStats, PsedOptions};
