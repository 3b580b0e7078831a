use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureSequence, Segment, SegmentArchive};
use crate::error::{Error, Result};
use crate::DEFAULT_MAX_FRAMES;

/// On-disk form of a segment: one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub id: String,
    pub lang: String,
    pub word: String,
    pub phonemes: Vec<String>,
    pub features: Vec<Vec<f64>>,
}

impl From<&Segment> for SegmentRecord {
    fn from(s: &Segment) -> Self {
        Self {
            id: s.id.clone(),
            lang: s.lang.clone(),
            word: s.word.clone(),
            phonemes: s.phonemes.clone(),
            features: s.features.to_rows(),
        }
    }
}

/// Loads an archive, rejecting segments longer than 50 frames.
pub fn load_archive(path: impl AsRef<Path>) -> Result<SegmentArchive> {
    load_archive_with(path, DEFAULT_MAX_FRAMES)
}

pub fn load_archive_with(path: impl AsRef<Path>, max_frames: usize) -> Result<SegmentArchive> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut segments = Vec::new();
    let mut ids = HashSet::new();
    let mut feature_dim = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SegmentRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        let features = FeatureSequence::from_rows(&rec.features)
            .map_err(|e| parse_err(lineno, format!("segment `{}`: {e}", rec.id)))?;
        let dim = *feature_dim.get_or_insert(features.dim());
        if features.dim() != dim {
            return Err(Error::DimensionMismatch {
                id: rec.id,
                expected: dim,
                found: features.dim(),
            });
        }
        let seg = Segment {
            id: rec.id,
            lang: rec.lang,
            word: rec.word,
            phonemes: rec.phonemes,
            features,
        };
        seg.check(max_frames)?;
        if !ids.insert(seg.id.clone()) {
            return Err(Error::DuplicateId(seg.id));
        }
        segments.push(seg);
    }
    Ok(SegmentArchive::from_validated(
        segments,
        feature_dim.unwrap_or(0),
    ))
}

pub fn save_archive(archive: &SegmentArchive, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for seg in archive {
        serde_json::to_writer(&mut w, &SegmentRecord::from(seg))
            .map_err(|e| Error::json(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
