use ndarray::{Array1, Array2, ArrayView1};

use super::{slice1, slice1_mut, slice2, slice2_mut, ParamSet, Tensor};

/// Affine readout `y = W_o h + b_o` from hidden state to feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineParams {
    pub w_o: Array2<f64>,
    pub b_o: Array1<f64>,
}

impl AffineParams {
    pub fn zeros(output_dim: usize, input_dim: usize) -> Self {
        Self {
            w_o: Array2::zeros((output_dim, input_dim)),
            b_o: Array1::zeros(output_dim),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.w_o.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_o.ncols()
    }

    pub fn apply(&self, h: ArrayView1<'_, f64>) -> Array1<f64> {
        self.w_o.dot(&h) + &self.b_o
    }
}

impl ParamSet for AffineParams {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        vec![
            Tensor {
                name: "W_o",
                shape: self.w_o.shape(),
                data: slice2(&self.w_o),
            },
            Tensor {
                name: "b_o",
                shape: self.b_o.shape(),
                data: slice1(&self.b_o),
            },
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![slice2_mut(&mut self.w_o), slice1_mut(&mut self.b_o)]
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.output_dim(), self.input_dim())
    }
}
