use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{bptt, reconstruction_loss, SaGradients, SaModel};
use crate::corpus::{FeatureSequence, SegmentArchive};
use crate::error::{Error, Result};
use crate::nncore::{apply_sgd, lr_at, LossReduction, LrSchedule, ParamSet};
use crate::{par, rng_from_seed};

fn default_clip() -> Option<f64> {
    Some(5.0)
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_batches: usize,
    #[serde(default)]
    pub schedule: LrSchedule,
    /// Global-norm clipping threshold; `None` disables clipping.
    #[serde(default = "default_clip")]
    pub clip_norm: Option<f64>,
    #[serde(default)]
    pub loss_reduction: LossReduction,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_batches: 1000,
            schedule: LrSchedule::default(),
            clip_norm: default_clip(),
            loss_reduction: LossReduction::Mean,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::InvalidArgument(format!("clip_norm {c} must be > 0")));
            }
        }
        self.schedule.validate()
    }
}

/// Mean loss and mean gradient over a batch. Per-sequence gradients are
/// computed independently and summed in batch order.
pub fn batch_gradients(
    model: &SaModel,
    batch: &[&FeatureSequence],
    reduction: LossReduction,
) -> Result<(f64, SaGradients)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let per_seq = par::try_map(batch, |s| bptt(model, s, reduction))?;
    let mut total = model.zeros_like();
    let mut loss = 0.0;
    for (l, g) in &per_seq {
        loss += l;
        total.add_assign(g);
    }
    let n = batch.len() as f64;
    total.scale(1.0 / n);
    Ok((loss / n, total))
}

/// Average reconstruction loss (mean reduction) over an archive.
pub fn mean_reconstruction_loss(model: &SaModel, archive: &SegmentArchive) -> Result<f64> {
    if archive.is_empty() {
        return Err(Error::EmptyArchive);
    }
    let losses = par::try_map(archive.segments(), |s| {
        reconstruction_loss(model, &s.features)
    })?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

struct Batcher {
    order: Vec<usize>,
    cursor: usize,
    shuffle: bool,
    rng: rand_chacha::ChaCha8Rng,
}

impl Batcher {
    fn new(n: usize, shuffle: bool, seed: u64) -> Self {
        let mut b = Self {
            order: (0..n).collect(),
            cursor: 0,
            shuffle,
            rng: rng_from_seed(seed),
        };
        b.new_epoch();
        b
    }

    fn new_epoch(&mut self) {
        if self.shuffle {
            self.order.shuffle(&mut self.rng);
        }
        self.cursor = 0;
    }

    fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.cursor == self.order.len() {
                self.new_epoch();
            }
            out.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        out
    }
}

/// Runs `cfg.max_batches` SGD steps on `archive`. Returns the trained model
/// and the per-batch training loss (measured before each update).
pub fn train(
    model: SaModel,
    archive: &SegmentArchive,
    cfg: &TrainConfig,
) -> Result<(SaModel, Vec<(usize, f64)>)> {
    cfg.validate()?;
    model.check_shapes()?;
    if archive.is_empty() {
        return Err(Error::EmptyArchive);
    }
    if archive.feature_dim() != model.feature_dim() {
        return Err(Error::ShapeMismatch(format!(
            "archive has {} features, model expects {}",
            archive.feature_dim(),
            model.feature_dim()
        )));
    }

    let segs = archive.segments();
    let mut model = model;
    let mut curve = Vec::with_capacity(cfg.max_batches);
    let mut batcher = Batcher::new(segs.len(), cfg.shuffle, cfg.seed);
    // parameters that last produced a finite loss
    let mut last_good = model.clone();
    for b in 0..cfg.max_batches {
        let idx = batcher.next_batch(cfg.batch_size);
        let batch: Vec<&FeatureSequence> = idx.iter().map(|&i| &segs[i].features).collect();
        let (loss, grads) = batch_gradients(&model, &batch, cfg.loss_reduction)?;
        if !loss.is_finite() || !grads.all_finite() {
            return Err(Error::NonFiniteLoss {
                batch: b,
                loss,
                last_finite: Box::new(last_good),
                curve,
            });
        }
        last_good.clone_from(&model);
        apply_sgd(&mut model, &grads, lr_at(&cfg.schedule, b), cfg.clip_norm)?;
        curve.push((b, loss));
        if b % 100 == 0 {
            log::debug!("batch {b}: loss {loss:.6}");
        }
    }
    Ok((model, curve))
}

/// Continues training a pretrained model on `subset`. An empty subset leaves
/// the model unchanged.
pub fn fine_tune(model: SaModel, subset: &SegmentArchive, cfg: &TrainConfig) -> Result<SaModel> {
    if subset.is_empty() || cfg.max_batches == 0 {
        return Ok(model);
    }
    train(model, subset, cfg).map(|(m, _)| m)
}
