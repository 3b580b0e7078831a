use std::ops::Deref;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::corpus::FeatureSequence;
use crate::error::{Error, Result};
pub use crate::nncore::GradCheckReport;
use crate::nncore::{
    check_gradients, gru_backward, gru_forward, init_params, mse_loss, AffineParams, GruInput,
    GruParams, LossReduction, ParamSet, Tensor, DEFAULT_REL_FLOOR,
};
use crate::DEFAULT_MAX_FRAMES;

/// Fixed-length representation of a segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(z: Vec<f64>) -> Self {
        Self(z)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for Embedding {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Embedding {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<Array1<f64>> for Embedding {
    fn from(v: Array1<f64>) -> Self {
        Self(v.to_vec())
    }
}

/// Encoder GRU, historyless decoder GRU and affine readout.
#[derive(Debug, Clone, PartialEq)]
pub struct SaModel {
    pub encoder: GruParams,
    pub decoder: GruParams,
    pub output: AffineParams,
}

/// Gradients share the parameter layout.
pub type SaGradients = SaModel;

impl SaModel {
    /// Randomly initialised model for `feature_dim`-dim frames and
    /// `embed_dim`-dim embeddings.
    pub fn new(feature_dim: usize, embed_dim: usize, seed: u64) -> Self {
        let (encoder, decoder, output) = init_params(feature_dim, embed_dim, feature_dim, seed);
        Self {
            encoder,
            decoder,
            output,
        }
    }

    pub fn zeros(feature_dim: usize, embed_dim: usize) -> Self {
        Self {
            encoder: GruParams::zeros(feature_dim, embed_dim),
            decoder: GruParams::zeros(feature_dim, embed_dim),
            output: AffineParams::zeros(feature_dim, embed_dim),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn embed_dim(&self) -> usize {
        self.encoder.hidden_dim()
    }

    pub fn check_shapes(&self) -> Result<()> {
        self.encoder.check_shapes()?;
        self.decoder.check_shapes()?;
        let (f, d) = (self.feature_dim(), self.embed_dim());
        if self.decoder.input_dim() != f
            || self.decoder.hidden_dim() != d
            || self.output.w_o.dim() != (f, d)
            || self.output.b_o.len() != f
        {
            return Err(Error::ShapeMismatch(format!(
                "decoder/readout shapes inconsistent with F={f}, d={d}"
            )));
        }
        Ok(())
    }

    fn check_sequence(&self, seq: &FeatureSequence) -> Result<()> {
        if seq.dim() != self.feature_dim() {
            return Err(Error::ShapeMismatch(format!(
                "sequence has {} features, model expects {}",
                seq.dim(),
                self.feature_dim()
            )));
        }
        if seq.len() > DEFAULT_MAX_FRAMES {
            return Err(Error::OverLength {
                id: String::new(),
                frames: seq.len(),
                max_frames: DEFAULT_MAX_FRAMES,
            });
        }
        Ok(())
    }
}

impl ParamSet for SaModel {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        // names are static; prefixes are added by `tensor_names`
        let mut v = self.encoder.tensors();
        v.extend(self.decoder.tensors());
        v.extend(self.output.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.encoder.tensors_mut();
        v.extend(self.decoder.tensors_mut());
        v.extend(self.output.tensors_mut());
        v
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.feature_dim(), self.embed_dim())
    }
}

impl SaModel {
    /// Fully qualified tensor names (`encoder.W_z`, ..., `output.b_o`) in
    /// [`ParamSet::tensors`] order.
    pub fn tensor_names(&self) -> Vec<String> {
        let pre = |p: &str, ts: Vec<Tensor<'_>>| {
            ts.iter()
                .map(|t| format!("{p}.{}", t.name))
                .collect::<Vec<_>>()
        };
        let mut v = pre("encoder", self.encoder.tensors());
        v.extend(pre("decoder", self.decoder.tensors()));
        v.extend(pre("output", self.output.tensors()));
        v
    }
}

/// Final encoder state from a zero initial state.
pub fn encode(model: &SaModel, seq: &FeatureSequence) -> Result<Embedding> {
    model.check_sequence(seq)?;
    let h0 = Array1::zeros(model.embed_dim());
    let trace = gru_forward(&model.encoder, GruInput::Frames(seq.frames()), h0.view())?;
    Ok(Embedding(trace.last().to_vec()))
}

fn readout<'a>(
    model: &SaModel,
    states: impl Iterator<Item = ArrayView1<'a, f64>>,
    t_out: usize,
) -> Array2<f64> {
    let mut y = Array2::zeros((t_out, model.feature_dim()));
    for (mut row, h) in y.axis_iter_mut(Axis(0)).zip(states) {
        row.assign(&model.output.apply(h));
    }
    y
}

/// Historyless decoding of `t_out` frames from embedding `z`.
pub fn decode(model: &SaModel, z: &[f64], t_out: usize) -> Result<Array2<f64>> {
    if z.len() != model.embed_dim() {
        return Err(Error::ShapeMismatch(format!(
            "embedding has {} dims, model has {}",
            z.len(),
            model.embed_dim()
        )));
    }
    if t_out == 0 {
        return Err(Error::InvalidArgument("decode length must be >= 1".into()));
    }
    let h0 = ArrayView1::from(z);
    let trace = gru_forward(&model.decoder, GruInput::Zeros(t_out), h0)?;
    Ok(readout(model, trace.states().map(|s| s.view()), t_out))
}

/// Mean-reduced reconstruction error of `seq` through the autoencoder.
pub fn reconstruction_loss(model: &SaModel, seq: &FeatureSequence) -> Result<f64> {
    reconstruction_loss_with(model, seq, LossReduction::Mean)
}

pub(crate) fn reconstruction_loss_with(
    model: &SaModel,
    seq: &FeatureSequence,
    red: LossReduction,
) -> Result<f64> {
    let z = encode(model, seq)?;
    let y = decode(model, &z, seq.len())?;
    Ok(mse_loss(&y, seq.frames(), red)?.0)
}

/// Exact gradient of the reconstruction loss of one sequence with respect to
/// every parameter, by backpropagation through decoder and encoder. Returns
/// the loss alongside.
pub fn bptt(
    model: &SaModel,
    seq: &FeatureSequence,
    reduction: LossReduction,
) -> Result<(f64, SaGradients)> {
    bptt_with_target(model, seq, seq.frames(), reduction)
}

/// Compares [`bptt`] (mean loss) against central differences of step `eps`
/// for every parameter of `model`.
pub fn gradient_check(model: &SaModel, seq: &FeatureSequence, eps: f64) -> Result<GradCheckReport> {
    let (_, grads) = bptt(model, seq, LossReduction::Mean)?;
    let loss = |p: &SaModel| reconstruction_loss(p, seq).unwrap_or(f64::NAN);
    Ok(check_gradients(model, &grads, loss, eps, DEFAULT_REL_FLOOR))
}

pub(crate) fn bptt_with_target(
    model: &SaModel,
    seq: &FeatureSequence,
    target: &Array2<f64>,
    reduction: LossReduction,
) -> Result<(f64, SaGradients)> {
    model.check_sequence(seq)?;
    let t = seq.len();
    let d = model.embed_dim();
    let x = seq.frames();

    let h0 = Array1::zeros(d);
    let enc = gru_forward(&model.encoder, GruInput::Frames(x), h0.view())?;
    let z = enc.last();
    let dec = gru_forward(&model.decoder, GruInput::Zeros(t), z.view())?;
    let y = readout(model, dec.states().map(|s| s.view()), t);
    let (loss, dy) = mse_loss(&y, target, reduction)?;

    let mut grads = model.zeros_like();
    let mut dh_dec = Array2::zeros((t, d));
    for (k, (dy_k, h_k)) in dy.axis_iter(Axis(0)).zip(dec.states()).enumerate() {
        for (i, &g) in dy_k.iter().enumerate() {
            grads.output.b_o[i] += g;
            if g != 0.0 {
                grads.output.w_o.row_mut(i).scaled_add(g, h_k);
            }
        }
        dh_dec.row_mut(k).assign(&model.output.w_o.t().dot(&dy_k));
    }
    let (g_dec, dz) = gru_backward(&model.decoder, GruInput::Zeros(t), &dec, &dh_dec)?;

    let mut dh_enc = Array2::zeros((t, d));
    dh_enc.row_mut(t - 1).assign(&dz);
    let (g_enc, _) = gru_backward(&model.encoder, GruInput::Frames(x), &enc, &dh_enc)?;

    grads.encoder = g_enc;
    grads.decoder = g_dec;
    Ok((loss, grads))
}
