//! Small dense neural numerics in double precision: a GRU cell with exact
//! backpropagation through time, an affine readout, mean-squared error, plain
//! SGD with step decay, and finite-difference gradient checking.

mod affine;
mod gradcheck;
mod gru;
mod init;
mod loss;
mod sgd;

pub use affine::AffineParams;
pub use gradcheck::{
    check_gradients, relative_error, GradCheckReport, GradCheckWorst, DEFAULT_REL_FLOOR,
};
pub use gru::{gru_backward, gru_forward, gru_step, GruInput, GruParams, GruTrace, HiddenState};
pub use init::init_params;
pub use loss::{mse_loss, LossReduction};
pub use sgd::{apply_sgd, global_norm, lr_at, sgd_step, LrSchedule};

/// Read-only view of one named parameter tensor (row-major).
#[derive(Debug, Clone, Copy)]
pub struct Tensor<'a> {
    pub name: &'a str,
    pub shape: &'a [usize],
    pub data: &'a [f64],
}

/// A fixed, ordered collection of parameter tensors.
///
/// `tensors` and `tensors_mut` must list tensors in the same order; gradient
/// containers reuse the parameter type, so zipping the two is how updates and
/// finite-difference probes address individual entries.
pub trait ParamSet {
    fn tensors(&self) -> Vec<Tensor<'_>>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;
    fn zeros_like(&self) -> Self;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    /// `self += other`, elementwise.
    fn add_assign(&mut self, other: &Self)
    where
        Self: Sized,
    {
        let src = other.tensors();
        for (dst, s) in self.tensors_mut().into_iter().zip(src) {
            for (a, b) in dst.iter_mut().zip(s.data) {
                *a += b;
            }
        }
    }

    fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

pub(crate) fn slice1(a: &ndarray::Array1<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

pub(crate) fn slice2(a: &ndarray::Array2<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

pub(crate) fn slice1_mut(a: &mut ndarray::Array1<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}

pub(crate) fn slice2_mut(a: &mut ndarray::Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
