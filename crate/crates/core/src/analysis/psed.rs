use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::edit_distance;
use crate::corpus::SegmentArchive;
use crate::error::{Error, Result};
use crate::retrieval::{cosine, IndexedEmbedding};
use crate::{par, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsedOptions {
    /// Largest edit distance kept; pairs further apart are ignored.
    pub max_distance: usize,
    /// Sample this many random pairs instead of enumerating all of them.
    pub sample_pairs: Option<usize>,
    pub seed: u64,
}

impl Default for PsedOptions {
    fn default() -> Self {
        Self {
            max_distance: 4,
            sample_pairs: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsedBucket {
    pub distance: usize,
    pub pair_count: u64,
    /// `None` when the bucket is empty.
    pub mean_cosine: Option<f64>,
    /// Population variance; `None` when the bucket is empty.
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsedBucketStats {
    pub buckets: Vec<PsedBucket>,
}

impl PsedBucketStats {
    pub fn total_pairs(&self) -> u64 {
        self.buckets.iter().map(|b| b.pair_count).sum()
    }

    /// Lines `distance, pair_count, mean_cosine, variance`; empty buckets
    /// print `NA`.
    pub fn to_table(&self) -> String {
        let mut s = String::from("distance, pair_count, mean_cosine, variance\n");
        for b in &self.buckets {
            let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
            s.push_str(&format!(
                "{}, {}, {}, {}\n",
                b.distance,
                b.pair_count,
                f(b.mean_cosine),
                f(b.variance)
            ));
        }
        s
    }
}

/// Streaming mean and sum of squared deviations, mergeable.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        self.n = n;
    }
}

/// Cosine similarity of segment pairs grouped by the edit distance between
/// their phoneme sequences. Only unordered pairs of distinct segments count.
pub fn psed_buckets(
    archive: &SegmentArchive,
    embeddings: &[IndexedEmbedding],
    opts: &PsedOptions,
) -> Result<PsedBucketStats> {
    let by_id: HashMap<&str, &IndexedEmbedding> =
        embeddings.iter().map(|e| (e.id.as_str(), e)).collect();
    let segs = archive.segments();
    let mut vecs = Vec::with_capacity(segs.len());
    for s in segs {
        let e = by_id
            .get(s.id.as_str())
            .ok_or_else(|| Error::MissingEmbedding(s.id.clone()))?;
        vecs.push(e.vector.as_slice());
    }
    if let Some(d) = vecs.first().map(|v| v.len()) {
        if let Some(s) = segs.iter().zip(&vecs).find(|(_, v)| v.len() != d) {
            return Err(Error::DimensionMismatch {
                id: s.0.id.clone(),
                expected: d,
                found: s.1.len(),
            });
        }
    }

    // distances between distinct phoneme sequences, computed once
    let mut seq_ids: HashMap<&[String], usize> = HashMap::new();
    let seg_seq: Vec<usize> = segs
        .iter()
        .map(|s| {
            let next = seq_ids.len();
            *seq_ids.entry(s.phonemes.as_slice()).or_insert(next)
        })
        .collect();
    let mut seqs: Vec<&[String]> = vec![&[]; seq_ids.len()];
    for (k, &v) in &seq_ids {
        seqs[v] = k;
    }
    let n_seq = seqs.len();
    let dist: Vec<usize> = par::map_range(n_seq * n_seq, |k| {
        edit_distance(seqs[k / n_seq], seqs[k % n_seq])
    });
    let pair_dist = |i: usize, j: usize| dist[seg_seq[i] * n_seq + seg_seq[j]];

    let nb = opts.max_distance + 1;
    let n = segs.len();
    let partials: Vec<Vec<Moments>> = match opts.sample_pairs {
        None => par::map_range(n, |i| {
            let mut acc = vec![Moments::default(); nb];
            for j in i + 1..n {
                let d = pair_dist(i, j);
                if d < nb {
                    acc[d].push(cosine(vecs[i], vecs[j]).expect("uniform dims"));
                }
            }
            acc
        }),
        Some(count) => {
            if n < 2 {
                return Err(Error::InsufficientData(
                    "pair sampling needs at least 2 segments".into(),
                ));
            }
            let mut rng = rng_from_seed(opts.seed);
            let mut acc = vec![Moments::default(); nb];
            for _ in 0..count {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let d = pair_dist(i, j);
                if d < nb {
                    acc[d].push(cosine(vecs[i], vecs[j]).expect("uniform dims"));
                }
            }
            vec![acc]
        }
    };

    let mut total = vec![Moments::default(); nb];
    for row in &partials {
        for (t, m) in total.iter_mut().zip(row) {
            t.merge(m);
        }
    }
    let buckets = total
        .iter()
        .enumerate()
        .map(|(d, m)| PsedBucket {
            distance: d,
            pair_count: m.n,
            mean_cosine: (m.n > 0).then_some(m.mean),
            variance: (m.n > 0).then(|| (m.m2 / m.n as f64).max(0.0)),
        })
        .collect();
    Ok(PsedBucketStats { buckets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_util::seg;
    use crate::sa::Embedding;

    fn toy() -> (SegmentArchive, Vec<IndexedEmbedding>) {
        let words: [(&str, &[&str]); 6] = [
            ("tag", &["t", "a", "g"]),
            ("tage", &["t", "a", "g", "e"]),
            ("tag", &["t", "a", "g"]),
            ("spiel", &["s", "p", "i", "l"]),
            ("spiele", &["s", "p", "i", "l", "e"]),
            ("wenig", &["v", "e", "n", "i", "g"]),
        ];
        let segs = words
            .iter()
            .enumerate()
            .map(|(i, (w, p))| seg(&format!("s{i}"), w, p, &[vec![0.0]]))
            .collect();
        let vs = [
            [1.0, 0.2, 0.0],
            [0.9, 0.4, 0.1],
            [1.0, 0.1, 0.0],
            [0.0, 1.0, 0.5],
            [-0.2, 1.0, 0.4],
            [0.3, -0.5, 1.0],
        ];
        let emb = vs
            .iter()
            .enumerate()
            .map(|(i, v)| IndexedEmbedding {
                id: format!("s{i}"),
                word: String::new(),
                vector: Embedding::new(v.to_vec()),
            })
            .collect();
        (SegmentArchive::new(segs).unwrap(), emb)
    }

    #[test]
    fn matches_pairwise_recomputation() {
        let (a, e) = toy();
        let stats = psed_buckets(
            &a,
            &e,
            &PsedOptions {
                max_distance: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(stats.buckets.len(), 5);
        let mut groups: Vec<Vec<f64>> = vec![vec![]; 5];
        let s = a.segments();
        for i in 0..6 {
            for j in i + 1..6 {
                let d = edit_distance(&s[i].phonemes, &s[j].phonemes);
                if d <= 4 {
                    groups[d].push(cosine(&e[i].vector, &e[j].vector).unwrap());
                }
            }
        }
        for (b, g) in stats.buckets.iter().zip(&groups) {
            assert_eq!(b.pair_count as usize, g.len());
            if g.is_empty() {
                assert!(b.mean_cosine.is_none() && b.variance.is_none());
            } else {
                let m = g.iter().sum::<f64>() / g.len() as f64;
                let v = g.iter().map(|x| (x - m).powi(2)).sum::<f64>() / g.len() as f64;
                approx::assert_abs_diff_eq!(b.mean_cosine.unwrap(), m, epsilon = 1e-12);
                approx::assert_abs_diff_eq!(b.variance.unwrap(), v, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn constant_embeddings() {
        let (a, mut e) = toy();
        for x in &mut e {
            x.vector = Embedding::new(vec![0.5, -1.0, 2.0]);
        }
        let stats = psed_buckets(&a, &e, &PsedOptions::default()).unwrap();
        for b in stats.buckets.iter().filter(|b| b.pair_count > 0) {
            approx::assert_abs_diff_eq!(b.mean_cosine.unwrap(), 1.0, epsilon = 1e-12);
            approx::assert_abs_diff_eq!(b.variance.unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn missing_embedding_and_sampling() {
        let (a, e) = toy();
        assert!(
            matches!(psed_buckets(&a, &e[..5], &PsedOptions::default()), Err(Error::MissingEmbedding(id)) if id == "s5")
        );
        let opts = PsedOptions {
            max_distance: 10,
            sample_pairs: Some(500),
            seed: 3,
        };
        let s1 = psed_buckets(&a, &e, &opts).unwrap();
        assert_eq!(s1.total_pairs(), 500);
        assert_eq!(s1, psed_buckets(&a, &e, &opts).unwrap());
        assert!(s1
            .to_table()
            .starts_with("distance, pair_count, mean_cosine, variance\n0, "));
    }
}
