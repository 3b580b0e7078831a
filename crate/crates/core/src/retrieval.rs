//! Query-by-example search over fixed-length embeddings: an exact cosine
//! index, ranked lists, and average precision / MAP.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Segment, SegmentArchive};
use crate::error::{Error, Result};
use crate::par;
use crate::sa::Embedding;

/// One line of an embedding file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedEmbedding {
    pub id: String,
    pub word: String,
    pub vector: Embedding,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn cosine_with_norms(a: &[f64], na: f64, b: &[f64], nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "cosine of {}-dim and {}-dim vectors",
            a.len(),
            b.len()
        )));
    }
    Ok(cosine_with_norms(a, norm(a), b, norm(b)))
}

/// Immutable collection of embeddings searched by exhaustive cosine scan.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalIndex {
    entries: Vec<IndexedEmbedding>,
    norms: Vec<f64>,
    dim: usize,
}

pub fn build_index(entries: Vec<IndexedEmbedding>) -> Result<RetrievalIndex> {
    let dim = entries.first().map_or(0, |e| e.vector.dim());
    let mut ids = HashSet::with_capacity(entries.len());
    for e in &entries {
        if e.vector.dim() != dim {
            return Err(Error::DimensionMismatch {
                id: e.id.clone(),
                expected: dim,
                found: e.vector.dim(),
            });
        }
        if !ids.insert(e.id.as_str()) {
            return Err(Error::DuplicateId(e.id.clone()));
        }
    }
    let norms = entries.iter().map(|e| norm(&e.vector)).collect();
    Ok(RetrievalIndex {
        entries,
        norms,
        dim,
    })
}

/// Search results, best first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList(Vec<(String, f64)>);

impl RankedList {
    pub fn from_hits(hits: Vec<(String, f64)>) -> Self {
        Self(hits)
    }

    pub fn hits(&self) -> &[(String, f64)] {
        &self.0
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(id, _)| id.as_str())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl RetrievalIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[IndexedEmbedding] {
        &self.entries
    }

    fn scores(&self, qz: &[f64]) -> Result<Vec<f64>> {
        if !self.is_empty() && qz.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "query has {} dims, index has {}",
                qz.len(),
                self.dim
            )));
        }
        let nq = norm(qz);
        Ok(self
            .entries
            .iter()
            .zip(&self.norms)
            .map(|(e, &ne)| cosine_with_norms(qz, nq, &e.vector, ne))
            .collect())
    }

    /// Ranks all entries by cosine similarity to `qz` (descending, ties by
    /// ascending id) and keeps the top `k` (`None` keeps everything).
    pub fn query(&self, qz: &[f64], k: Option<usize>) -> Result<RankedList> {
        let scores = self.scores(qz)?;
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| self.entries[a].id.cmp(&self.entries[b].id))
        });
        let keep = k.unwrap_or(order.len()).min(order.len());
        Ok(RankedList(
            order[..keep]
                .iter()
                .map(|&i| (self.entries[i].id.clone(), scores[i]))
                .collect(),
        ))
    }
}

/// Mean of precision-at-hit over the relevant items. Relevant ids missing
/// from `ranked` count as never retrieved.
pub fn average_precision(ranked: &RankedList, relevant: &HashSet<String>) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::EmptyRelevant);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, id) in ranked.ids().enumerate() {
        if relevant.contains(id) {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
        }
    }
    Ok(sum / relevant.len() as f64)
}

/// MAP over full rankings; an entry is relevant to a query when the word
/// labels match.
pub fn mean_average_precision(
    index: &RetrievalIndex,
    queries: &[(Embedding, String)],
) -> Result<f64> {
    mean_average_precision_with(index, queries, |entry, word| entry.word == word)
}

pub fn mean_average_precision_with<R>(
    index: &RetrievalIndex,
    queries: &[(Embedding, String)],
    relevant: R,
) -> Result<f64>
where
    R: Fn(&IndexedEmbedding, &str) -> bool + Sync + Send,
{
    if queries.is_empty() {
        return Err(Error::InvalidArgument("no queries".into()));
    }
    let aps = par::try_map(queries, |(qz, word)| {
        let rel: HashSet<String> = index
            .entries()
            .iter()
            .filter(|e| relevant(e, word))
            .map(|e| e.id.clone())
            .collect();
        if rel.is_empty() {
            return Err(Error::QueryWithoutRelevant(word.clone()));
        }
        average_precision(&index.query(qz, None)?, &rel)
    })?;
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Embeds every segment with `f`, preserving archive order.
pub fn embed_archive<F>(archive: &SegmentArchive, f: F) -> Result<Vec<IndexedEmbedding>>
where
    F: Fn(&Segment) -> Result<Embedding> + Sync + Send,
{
    par::try_map(archive.segments(), |s| {
        Ok(IndexedEmbedding {
            id: s.id.clone(),
            word: s.word.clone(),
            vector: f(s)?,
        })
    })
}

/// Splits embedded queries into the `(embedding, word)` form MAP expects.
pub fn as_queries(entries: &[IndexedEmbedding]) -> Vec<(Embedding, String)> {
    entries
        .iter()
        .map(|e| (e.vector.clone(), e.word.clone()))
        .collect()
}

pub fn save_embeddings(entries: &[IndexedEmbedding], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for e in entries {
        serde_json::to_writer(&mut w, e).map_err(|err| Error::json(path, err))?;
        w.write_all(b"\n").map_err(|err| Error::io(path, err))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<Vec<IndexedEmbedding>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let e: IndexedEmbedding = serde_json::from_str(&line).map_err(|err| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: err.to_string(),
        })?;
        if !e.vector.is_finite() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("embedding `{}` has non-finite values", e.id),
            });
        }
        out.push(e);
    }
    Ok(out)
}
