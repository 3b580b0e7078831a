use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::PsedBucketStats;
use crate::error::{Error, Result};

/// One MAP value together with the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub row: String,
    pub column: String,
    pub dim: usize,
    pub map: f64,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub label: String,
    /// `(batch, loss)` pairs.
    pub points: Vec<(usize, f64)>,
}

/// Projected centroid difference `delta(b) - delta(a)` for a word pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaPairDiff {
    pub word_a: String,
    pub word_b: String,
    pub diff: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub cells: Vec<ReportCell>,
    pub loss_curves: Vec<LossCurve>,
    pub psed: Option<PsedBucketStats>,
    pub pca: Vec<PcaPairDiff>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config_hash: String, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            config_hash,
            seed,
            cells: Vec::new(),
            loss_curves: Vec::new(),
            psed: None,
            pca: Vec::new(),
        }
    }

    pub fn cell(&self, row: &str) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.row == row)
    }

    pub fn rows(&self) -> Vec<&str> {
        self.cells.iter().map(|c| c.row.as_str()).collect()
    }

    /// Plain-text rendering: the MAP table, then PSED and PCA sections when
    /// present.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# {} config {} seed {}",
            self.experiment, self.config_hash, self.seed
        );
        let mut columns: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !columns.contains(&c.column.as_str()) {
                columns.push(&c.column);
            }
        }
        let mut rows: Vec<(&str, usize)> = Vec::new();
        for c in &self.cells {
            if !rows.iter().any(|(r, _)| *r == c.row) {
                rows.push((&c.row, c.dim));
            }
        }
        let _ = write!(s, "{:<16}{:>6}", "method", "dim");
        for col in &columns {
            let _ = write!(s, "{col:>10}");
        }
        s.push('\n');
        for (row, dim) in rows {
            let _ = write!(s, "{row:<16}{dim:>6}");
            for col in &columns {
                match self.cells.iter().find(|c| c.row == row && c.column == *col) {
                    Some(c) => {
                        let _ = write!(s, "{:>10.4}", c.map);
                    }
                    None => {
                        let _ = write!(s, "{:>10}", "-");
                    }
                }
            }
            s.push('\n');
        }
        if let Some(p) = &self.psed {
            s.push_str("\n# cosine similarity by phoneme edit distance\n");
            s.push_str(&p.to_table());
        }
        if !self.pca.is_empty() {
            s.push_str("\n# PCA difference vectors\nword_a, word_b, dx, dy\n");
            for d in &self.pca {
                let x = d.diff.first().copied().unwrap_or(0.0);
                let y = d.diff.get(1).copied().unwrap_or(0.0);
                let _ = writeln!(s, "{}, {}, {x:.6}, {y:.6}", d.word_a, d.word_b);
            }
        }
        s
    }

    /// Writes `report.json` and `report.txt` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let json = dir.join("report.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(&json, e))?;
        fs::write(&json, text + "\n").map_err(|e| Error::io(&json, e))?;
        let txt = dir.join("report.txt");
        fs::write(&txt, self.to_table()).map_err(|e| Error::io(&txt, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// Append-only `cells.jsonl`; every cell is flushed as soon as it exists.
pub(crate) struct CellLog {
    path: PathBuf,
    file: File,
}

impl CellLog {
    pub(crate) fn create(dir: &Path) -> Result<Self> {
        let path = dir.join("cells.jsonl");
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Self { path, file })
    }

    pub(crate) fn append(&mut self, cell: &ReportCell) -> Result<()> {
        let mut line = serde_json::to_vec(cell).map_err(|e| Error::json(&self.path, e))?;
        line.push(b'\n');
        self.file
            .write_all(&line)
            .map_err(|e| Error::io(&self.path, e))?;
        self.file.sync_data().map_err(|e| Error::io(&self.path, e))
    }
}

/// Reads back the cells written so far, e.g. after an aborted run.
pub fn load_cells(path: impl AsRef<Path>) -> Result<Vec<ReportCell>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
