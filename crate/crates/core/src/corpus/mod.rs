//! Segment archives: word-level feature sequences with their labels.
//!
//! Segments arrive pre-cut at word boundaries. This module validates them,
//! moves them to and from JSON-lines files, generates synthetic languages
//! and partitions archives into train/database/query/fine-tune splits.

mod archive;
mod split;
mod synth;

use std::collections::{BTreeSet, HashSet};

use ndarray::{Array2, ArrayView1};

pub use archive::{load_archive, load_archive_with, save_archive, SegmentRecord};
pub use split::{split_dataset, SplitSpec, Splits};
pub use synth::{
    derive_templates, random_lexicon, random_templates, suffix_pairs, synth_corpus, LexEntry,
    PhonemeTemplate, SynthConfig, SynthPreset,
};

use crate::error::{Error, Result};
use crate::DEFAULT_MAX_FRAMES;

/// A `T x F` matrix of acoustic features, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence(Array2<f64>);

impl FeatureSequence {
    /// Wraps a frame matrix. Rejects empty or non-finite input.
    pub fn new(frames: Array2<f64>) -> Result<Self> {
        if frames.nrows() == 0 || frames.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "feature sequence must be non-empty, got {}x{}",
                frames.nrows(),
                frames.ncols()
            )));
        }
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "feature sequence contains non-finite values".into(),
            ));
        }
        Ok(Self(frames.as_standard_layout().into_owned()))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        let f = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != f) {
            return Err(Error::ShapeMismatch(format!(
                "frame {bad} has {} values, frame 0 has {f}",
                rows[bad].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let frames = Array2::from_shape_vec((t, f), flat)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Self::new(frames)
    }

    pub fn frames(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn frame(&self, t: usize) -> ArrayView1<'_, f64> {
        self.0.row(t)
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    /// Feature dimension `F`.
    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// One word-level audio segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: String,
    pub lang: String,
    pub word: String,
    pub phonemes: Vec<String>,
    pub features: FeatureSequence,
}

impl Segment {
    fn check(&self, max_frames: usize) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidSegment {
                id: self.id.clone(),
                reason: "empty id".into(),
            });
        }
        if self.word.is_empty() {
            return Err(Error::InvalidSegment {
                id: self.id.clone(),
                reason: "empty word label".into(),
            });
        }
        if self.phonemes.is_empty() {
            return Err(Error::InvalidSegment {
                id: self.id.clone(),
                reason: "empty phoneme sequence".into(),
            });
        }
        if self.features.len() > max_frames {
            return Err(Error::OverLength {
                id: self.id.clone(),
                frames: self.features.len(),
                max_frames,
            });
        }
        Ok(())
    }
}

/// An ordered, validated collection of segments sharing one feature dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SegmentArchive {
    segments: Vec<Segment>,
    feature_dim: usize,
}

impl SegmentArchive {
    /// Validates with the default 50-frame cap.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        Self::with_max_frames(segments, DEFAULT_MAX_FRAMES)
    }

    pub fn with_max_frames(segments: Vec<Segment>, max_frames: usize) -> Result<Self> {
        let feature_dim = segments.first().map_or(0, |s| s.features.dim());
        let mut seen = HashSet::with_capacity(segments.len());
        for s in &segments {
            s.check(max_frames)?;
            if s.features.dim() != feature_dim {
                return Err(Error::DimensionMismatch {
                    id: s.id.clone(),
                    expected: feature_dim,
                    found: s.features.dim(),
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        Ok(Self {
            segments,
            feature_dim,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Segment> {
        self.segments.iter()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Feature dimension `F`; zero for an empty archive.
    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn get(&self, id: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.id == id)
    }

    /// Distinct word labels, sorted.
    pub fn words(&self) -> BTreeSet<&str> {
        self.segments.iter().map(|s| s.word.as_str()).collect()
    }

    /// The first `n` segments (all of them if `n` exceeds the size).
    pub fn take(&self, n: usize) -> Self {
        Self {
            segments: self.segments.iter().take(n).cloned().collect(),
            feature_dim: self.feature_dim,
        }
    }

    /// Concatenates two archives; fails on duplicate ids or mismatched dims.
    pub fn concat(&self, other: &SegmentArchive) -> Result<Self> {
        let mut segs = self.segments.clone();
        segs.extend(other.segments.iter().cloned());
        Self::with_max_frames(segs, usize::MAX)
    }

    pub(crate) fn from_validated(segments: Vec<Segment>, feature_dim: usize) -> Self {
        Self {
            segments,
            feature_dim,
        }
    }
}

impl<'a> IntoIterator for &'a SegmentArchive {
    type Item = &'a Segment;
    type IntoIter = std::slice::Iter<'a, Segment>;

    fn into_iter(self) -> Self::IntoIter {
        self.segments.iter()
    }
}
