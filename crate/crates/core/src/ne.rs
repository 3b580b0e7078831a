//! Naive encoder baseline: split a sequence into `m` near-equal partitions,
//! average each, and concatenate the averages.

use serde::{Deserialize, Serialize};

use crate::corpus::FeatureSequence;
use crate::error::{Error, Result};
use crate::sa::Embedding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeConfig {
    pub m: usize,
}

impl NeConfig {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "partition count m must be >= 1".into(),
            ));
        }
        Ok(Self { m })
    }

    /// Embedding dimension for `feature_dim`-dim frames.
    pub fn output_dim(&self, feature_dim: usize) -> usize {
        feature_dim * self.m
    }
}

/// Half-open frame ranges of the `m` partitions of a `t`-frame sequence.
///
/// Boundaries are `floor(i * t / m)`. When a partition would be empty
/// (`t < m`) it is the single frame at `min(b_i, t - 1)`.
pub fn partition_bounds(t: usize, m: usize) -> Vec<(usize, usize)> {
    assert!(t >= 1 && m >= 1, "partition_bounds needs t >= 1 and m >= 1");
    let b = |i: usize| i * t / m;
    (0..m)
        .map(|i| {
            let (lo, hi) = (b(i), b(i + 1));
            if lo == hi {
                let f = lo.min(t - 1);
                (f, f + 1)
            } else {
                (lo, hi)
            }
        })
        .collect()
}

/// Partition-average-concatenate embedding of dimension `F * m`.
pub fn ne_encode(seq: &FeatureSequence, m: usize) -> Embedding {
    let f = seq.dim();
    let mut out = Vec::with_capacity(f * m);
    for (lo, hi) in partition_bounds(seq.len(), m) {
        let n = (hi - lo) as f64;
        let mut acc = vec![0.0; f];
        for t in lo..hi {
            for (a, v) in acc.iter_mut().zip(seq.frame(t)) {
                *a += v;
            }
        }
        out.extend(acc.into_iter().map(|a| a / n));
    }
    Embedding::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bounds_examples() {
        assert_eq!(partition_bounds(6, 3), vec![(0, 2), (2, 4), (4, 6)]);
        assert_eq!(partition_bounds(7, 3), vec![(0, 2), (2, 4), (4, 7)]);
        // b = [0, 0, 1, 2]: the first partition is empty and falls back to frame 0
        assert_eq!(partition_bounds(2, 3), vec![(0, 1), (0, 1), (1, 2)]);
        assert_eq!(partition_bounds(1, 4), vec![(0, 1); 4]);
    }

    #[test]
    fn encode_examples() {
        let s = FeatureSequence::from_rows(&[vec![1.0], vec![3.0], vec![5.0], vec![7.0]]).unwrap();
        assert_eq!(ne_encode(&s, 2).as_slice(), &[2.0, 6.0]);

        let c = FeatureSequence::from_rows(&vec![vec![0.5, -2.0, 4.0]; 9]).unwrap();
        assert_eq!(
            ne_encode(&c, 4).as_slice(),
            [0.5, -2.0, 4.0].repeat(4).as_slice()
        );

        let s = FeatureSequence::from_rows(&vec![vec![0.0; 39]; 20]).unwrap();
        assert_eq!(ne_encode(&s, 6).dim(), 234);
        assert_eq!(NeConfig::new(3).unwrap().output_dim(39), 117);
        assert!(NeConfig::new(0).is_err());
    }

    proptest! {
        #[test]
        fn partitions_cover_when_t_ge_m(t in 1usize..60, m in 1usize..30) {
            let b = partition_bounds(t, m);
            prop_assert_eq!(b.len(), m);
            if t >= m {
                prop_assert_eq!(b[0].0, 0);
                prop_assert_eq!(b[m - 1].1, t);
                for w in b.windows(2) {
                    prop_assert_eq!(w[0].1, w[1].0);
                    prop_assert!(w[0].0 < w[0].1);
                }
            }
        }

        #[test]
        fn scale_equivariant(v in prop::collection::vec(-5.0f64..5.0, 1..40), m in 1usize..8, alpha in -3.0f64..3.0) {
            let rows: Vec<Vec<f64>> = v.iter().map(|x| vec![*x, x * 0.5]).collect();
            let s = FeatureSequence::from_rows(&rows).unwrap();
            let scaled = FeatureSequence::new(s.frames() * alpha).unwrap();
            let a = ne_encode(&s, m);
            let b = ne_encode(&scaled, m);
            prop_assert_eq!(a.dim(), 2 * m);
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x * alpha - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }

        #[test]
        fn permutation_within_partition(v in prop::collection::vec(-5.0f64..5.0, 4..40), m in 1usize..4) {
            let rows: Vec<Vec<f64>> = v.iter().map(|x| vec![*x]).collect();
            let s = FeatureSequence::from_rows(&rows).unwrap();
            let (lo, hi) = partition_bounds(rows.len(), m)[0];
            let mut perm = rows.clone();
            perm[lo..hi].reverse();
            let a = ne_encode(&s, m);
            let b = ne_encode(&FeatureSequence::from_rows(&perm).unwrap(), m);
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
