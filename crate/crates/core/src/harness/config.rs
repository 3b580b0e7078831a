use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::PsedOptions;
use crate::corpus::SplitSpec;
use crate::error::{Error, Result};
use crate::sa::TrainConfig;

/// Everything needed to reproduce a sweep or transfer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source_corpus: PathBuf,
    #[serde(default)]
    pub target_corpus: Option<PathBuf>,
    /// Required by the dimension sweep; the transfer run pretrains on the
    /// whole source corpus when absent.
    #[serde(default)]
    pub source_split: Option<SplitSpec>,
    #[serde(default)]
    pub target_split: Option<SplitSpec>,
    /// Embedding sizes to sweep. The transfer run uses the first entry.
    pub dims: Vec<usize>,
    pub ne_m: Vec<usize>,
    #[serde(default)]
    pub finetune_sizes: Vec<usize>,
    pub train: TrainConfig,
    /// Used for fine-tuning and for the no-transfer baseline; falls back to
    /// `train`.
    #[serde(default)]
    pub finetune: Option<TrainConfig>,
    pub out_dir: PathBuf,
    /// Initialisation seed shared by every model in the run.
    pub seed: u64,
    #[serde(default)]
    pub psed: Option<PsedOptions>,
    /// Word pairs for the PCA difference-vector table.
    #[serde(default)]
    pub pca_pairs: Vec<(String, String)>,
}

impl ExperimentConfig {
    /// Reads a JSON config. Relative paths inside it are resolved against the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.source_corpus);
        if let Some(t) = cfg.target_corpus.as_mut() {
            fix(t);
        }
        fix(&mut cfg.out_dir);
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn finetune_config(&self) -> &TrainConfig {
        self.finetune.as_ref().unwrap_or(&self.train)
    }

    fn check_common(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ExperimentConfig(m));
        if !self.source_corpus.exists() {
            return bad(format!(
                "source corpus {} not found",
                self.source_corpus.display()
            ));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dims must be a non-empty list of positive sizes".into());
        }
        if self.ne_m.is_empty() || self.ne_m.contains(&0) {
            return bad("ne_m must be a non-empty list of positive partition counts".into());
        }
        self.train.validate()?;
        self.finetune_config().validate()
    }

    pub fn validate_sweep(&self) -> Result<()> {
        self.check_common()?;
        match &self.source_split {
            Some(s) if s.train_count > 0 && s.db_count > 0 && s.query_count > 0 => Ok(()),
            _ => Err(Error::ExperimentConfig(
                "dimension sweep needs a source_split with train, db and query counts".into(),
            )),
        }
    }

    pub fn validate_transfer(&self) -> Result<()> {
        self.check_common()?;
        let bad = |m: &str| Err(Error::ExperimentConfig(m.into()));
        match &self.target_corpus {
            Some(t) if t.exists() => {}
            Some(t) => {
                return Err(Error::ExperimentConfig(format!(
                    "target corpus {} not found",
                    t.display()
                )))
            }
            None => return bad("transfer run needs target_corpus"),
        }
        let Some(split) = &self.target_split else {
            return bad("transfer run needs target_split");
        };
        if split.db_count == 0 || split.query_count == 0 {
            return bad("target_split needs db and query segments");
        }
        let Some(&largest) = self.finetune_sizes.iter().max() else {
            return bad("finetune_sizes must be non-empty");
        };
        if largest == 0 {
            return bad("the largest fine-tune size must be positive");
        }
        if largest > split.finetune_count {
            return Err(Error::ExperimentConfig(format!(
                "fine-tune size {largest} exceeds target_split.finetune_count {}",
                split.finetune_count
            )));
        }
        Ok(())
    }
}
