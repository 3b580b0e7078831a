use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::SaModel;
use crate::error::{Error, Result};
use crate::nncore::ParamSet;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Tag recorded in every checkpoint so the gate convention is unambiguous.
pub const GRU_CONVENTION: &str = "h = (1 - z) * h_prev + z * h_cand";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointTensor {
    pub name: String,
    pub shape: Vec<usize>,
    /// Row-major values.
    pub data: Vec<f64>,
}

/// JSON layout of a checkpoint file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub format_version: u32,
    pub feature_dim: usize,
    pub embed_dim: usize,
    pub gru_convention: String,
    pub tensors: Vec<CheckpointTensor>,
}

impl From<&SaModel> for CheckpointFile {
    fn from(model: &SaModel) -> Self {
        let tensors = model
            .tensor_names()
            .into_iter()
            .zip(model.tensors())
            .map(|(name, t)| CheckpointTensor {
                name,
                shape: t.shape.to_vec(),
                data: t.data.to_vec(),
            })
            .collect();
        Self {
            format_version: CHECKPOINT_VERSION,
            feature_dim: model.feature_dim(),
            embed_dim: model.embed_dim(),
            gru_convention: GRU_CONVENTION.into(),
            tensors,
        }
    }
}

impl TryFrom<CheckpointFile> for SaModel {
    type Error = Error;

    fn try_from(file: CheckpointFile) -> Result<Self> {
        if file.format_version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                expected: CHECKPOINT_VERSION,
                found: file.format_version,
            });
        }
        if file.gru_convention != GRU_CONVENTION {
            return Err(Error::CorruptCheckpoint(format!(
                "unsupported GRU convention `{}`",
                file.gru_convention
            )));
        }
        if file.feature_dim == 0 || file.embed_dim == 0 {
            return Err(Error::CorruptCheckpoint(
                "zero feature or embedding dimension".into(),
            ));
        }
        let mut model = SaModel::zeros(file.feature_dim, file.embed_dim);
        let names = model.tensor_names();
        let shapes: Vec<Vec<usize>> = model.tensors().iter().map(|t| t.shape.to_vec()).collect();
        if file.tensors.len() != names.len() {
            return Err(Error::CorruptCheckpoint(format!(
                "expected {} tensors, found {}",
                names.len(),
                file.tensors.len()
            )));
        }
        for ((dst, name), shape) in model.tensors_mut().into_iter().zip(&names).zip(&shapes) {
            let t = file
                .tensors
                .iter()
                .find(|t| &t.name == name)
                .ok_or_else(|| Error::CorruptCheckpoint(format!("missing tensor `{name}`")))?;
            if &t.shape != shape || t.data.len() != dst.len() {
                return Err(Error::CorruptCheckpoint(format!(
                    "tensor `{name}` has shape {:?} with {} values, expected {shape:?}",
                    t.shape,
                    t.data.len()
                )));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::CorruptCheckpoint(format!(
                    "tensor `{name}` has non-finite values"
                )));
            }
            dst.copy_from_slice(&t.data);
        }
        Ok(model)
    }
}

pub fn save_checkpoint(model: &SaModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &CheckpointFile::from(model))
        .map_err(|e| Error::json(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<SaModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::json(path, e))?;
    // check the version before the layout so newer formats fail cleanly
    if let Some(v) = value.get("format_version").and_then(|v| v.as_u64()) {
        if v != u64::from(CHECKPOINT_VERSION) {
            return Err(Error::VersionMismatch {
                expected: CHECKPOINT_VERSION,
                found: v as u32,
            });
        }
    }
    let file: CheckpointFile =
        serde_json::from_value(value).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
    SaModel::try_from(file)
}
