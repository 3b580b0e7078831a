use serde::{Deserialize, Serialize};

use crate::corpus::{Segment, SegmentArchive};
use crate::error::{Error, Result};
use crate::retrieval::IndexedEmbedding;
use crate::sa::Embedding;

/// Mean embedding of one word, written `delta(word)` in plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCentroid {
    pub word: String,
    pub centroid: Vec<f64>,
    pub count: usize,
}

fn mean_of<'a>(word: &str, vs: impl Iterator<Item = &'a [f64]>) -> Result<WordCentroid> {
    let mut acc: Vec<f64> = Vec::new();
    let mut count = 0;
    for v in vs {
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        } else if v.len() != acc.len() {
            return Err(Error::ShapeMismatch(format!(
                "embeddings of `{word}` differ in dimension"
            )));
        }
        acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
        count += 1;
    }
    if count == 0 {
        return Err(Error::UnknownWord(word.to_string()));
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    Ok(WordCentroid {
        word: word.to_string(),
        centroid: acc,
        count,
    })
}

/// Centroid of `embed_fn` over all segments labelled `word`.
pub fn word_centroid<F>(archive: &SegmentArchive, embed_fn: F, word: &str) -> Result<WordCentroid>
where
    F: Fn(&Segment) -> Result<Embedding>,
{
    let embs = archive
        .iter()
        .filter(|s| s.word == word)
        .map(&embed_fn)
        .collect::<Result<Vec<_>>>()?;
    mean_of(word, embs.iter().map(|e| e.as_slice()))
}

/// Centroid over precomputed embeddings labelled `word`.
pub fn centroid_from_embeddings(entries: &[IndexedEmbedding], word: &str) -> Result<WordCentroid> {
    mean_of(
        word,
        entries
            .iter()
            .filter(|e| e.word == word)
            .map(|e| e.vector.as_slice()),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    /// Orthonormal principal directions, strongest first.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component (sample covariance, `n - 1`).
    pub eigenvalues: Vec<f64>,
}

impl PcaProjection {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `components^T (v - mean)`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "vector has {} dims, projection expects {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(v.iter().zip(&self.mean))
                    .map(|(ci, (x, m))| ci * (x - m))
                    .sum()
            })
            .collect())
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns `(eigenvalues, eigenvectors as columns)`, unsorted.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Top-`k` principal components of `vectors`.
///
/// Each component is sign-normalised so that its first coordinate that is not
/// numerically zero is positive.
pub fn pca_fit(vectors: &[Vec<f64>], k: usize) -> Result<PcaProjection> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "PCA needs at least 2 vectors, got {n}"
        )));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::ShapeMismatch(
            "PCA input vectors differ in dimension".into(),
        ));
    }
    if k == 0 || k > d.min(n) {
        return Err(Error::InsufficientData(format!(
            "cannot extract {k} components from {n} vectors of dimension {d}"
        )));
    }
    let mut mean = vec![0.0; d];
    for v in vectors {
        mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = vec![vec![0.0; d]; d];
    for v in vectors {
        let c: Vec<f64> = v.iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..d {
            for j in i..d {
                cov[i][j] += c[i] * c[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }

    let (vals, vecs) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for &c in order.iter().take(k) {
        let mut comp: Vec<f64> = vecs.iter().map(|row| row[c]).collect();
        let nrm = comp.iter().map(|x| x * x).sum::<f64>().sqrt();
        comp.iter_mut().for_each(|x| *x /= nrm);
        if let Some(first) = comp.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                comp.iter_mut().for_each(|x| *x = -*x);
            }
        }
        components.push(comp);
        eigenvalues.push(vals[c].max(0.0));
    }
    Ok(PcaProjection {
        mean,
        components,
        eigenvalues,
    })
}

/// `project(delta(b)) - project(delta(a))` for each pair `(a, b)`.
pub fn pair_difference_vectors(
    pairs: &[(WordCentroid, WordCentroid)],
    proj: &PcaProjection,
) -> Result<Vec<Vec<f64>>> {
    pairs
        .iter()
        .map(|(a, b)| {
            let pa = proj.project(&a.centroid)?;
            let pb = proj.project(&b.centroid)?;
            Ok(pb.iter().zip(&pa).map(|(x, y)| x - y).collect())
        })
        .collect()
}
