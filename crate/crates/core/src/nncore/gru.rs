use ndarray::{Array1, Array2, ArrayView1, Zip};

use super::{sigmoid, slice1, slice1_mut, slice2, slice2_mut, ParamSet, Tensor};
use crate::error::{Error, Result};

/// The GRU hidden state `h_t`.
pub type HiddenState = Array1<f64>;

/// Parameters of one GRU layer with input size `F_in` and hidden size `H`.
///
/// Update convention: `h' = (1 - z) * h_prev + z * h_cand`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_z: Array2<f64>,
    pub w_r: Array2<f64>,
    pub w_h: Array2<f64>,
    pub u_z: Array2<f64>,
    pub u_r: Array2<f64>,
    pub u_h: Array2<f64>,
    pub b_z: Array1<f64>,
    pub b_r: Array1<f64>,
    pub b_h: Array1<f64>,
}

impl GruParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let w = || Array2::zeros((hidden_dim, input_dim));
        let u = || Array2::zeros((hidden_dim, hidden_dim));
        let b = || Array1::zeros(hidden_dim);
        Self {
            w_z: w(),
            w_r: w(),
            w_h: w(),
            u_z: u(),
            u_r: u(),
            u_h: u(),
            b_z: b(),
            b_r: b(),
            b_h: b(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_z.nrows()
    }

    /// Checks that every tensor agrees with `(input_dim, hidden_dim)`.
    pub fn check_shapes(&self) -> Result<()> {
        let (h, f) = (self.hidden_dim(), self.input_dim());
        let ok = [&self.w_z, &self.w_r, &self.w_h]
            .iter()
            .all(|m| m.dim() == (h, f))
            && [&self.u_z, &self.u_r, &self.u_h]
                .iter()
                .all(|m| m.dim() == (h, h))
            && [&self.b_z, &self.b_r, &self.b_h]
                .iter()
                .all(|b| b.len() == h);
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "GRU tensors inconsistent with F_in={f}, H={h}"
            )))
        }
    }
}

impl ParamSet for GruParams {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        vec![
            Tensor {
                name: "W_z",
                shape: self.w_z.shape(),
                data: slice2(&self.w_z),
            },
            Tensor {
                name: "W_r",
                shape: self.w_r.shape(),
                data: slice2(&self.w_r),
            },
            Tensor {
                name: "W_h",
                shape: self.w_h.shape(),
                data: slice2(&self.w_h),
            },
            Tensor {
                name: "U_z",
                shape: self.u_z.shape(),
                data: slice2(&self.u_z),
            },
            Tensor {
                name: "U_r",
                shape: self.u_r.shape(),
                data: slice2(&self.u_r),
            },
            Tensor {
                name: "U_h",
                shape: self.u_h.shape(),
                data: slice2(&self.u_h),
            },
            Tensor {
                name: "b_z",
                shape: self.b_z.shape(),
                data: slice1(&self.b_z),
            },
            Tensor {
                name: "b_r",
                shape: self.b_r.shape(),
                data: slice1(&self.b_r),
            },
            Tensor {
                name: "b_h",
                shape: self.b_h.shape(),
                data: slice1(&self.b_h),
            },
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            slice2_mut(&mut self.w_z),
            slice2_mut(&mut self.w_r),
            slice2_mut(&mut self.w_h),
            slice2_mut(&mut self.u_z),
            slice2_mut(&mut self.u_r),
            slice2_mut(&mut self.u_h),
            slice1_mut(&mut self.b_z),
            slice1_mut(&mut self.b_r),
            slice1_mut(&mut self.b_h),
        ]
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden_dim())
    }
}

/// Per-step inputs of a GRU run.
#[derive(Debug, Clone, Copy)]
pub enum GruInput<'a> {
    /// One input row per step.
    Frames(&'a Array2<f64>),
    /// `n` steps of the all-zero input.
    Zeros(usize),
}

impl GruInput<'_> {
    pub fn steps(&self) -> usize {
        match self {
            GruInput::Frames(x) => x.nrows(),
            GruInput::Zeros(n) => *n,
        }
    }

    fn frame(&self, t: usize) -> Option<ArrayView1<'_, f64>> {
        match self {
            GruInput::Frames(x) => Some(x.row(t)),
            GruInput::Zeros(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
struct StepCache {
    h_prev: Array1<f64>,
    z: Array1<f64>,
    r: Array1<f64>,
    cand: Array1<f64>,
    h: Array1<f64>,
}

/// Activations of a forward run, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct GruTrace {
    steps: Vec<StepCache>,
}

impl GruTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `h_t` for `t = 1..=T`.
    pub fn states(&self) -> impl Iterator<Item = &HiddenState> {
        self.steps.iter().map(|s| &s.h)
    }

    pub fn state(&self, t: usize) -> &HiddenState {
        &self.steps[t].h
    }

    pub fn last(&self) -> &HiddenState {
        &self.steps.last().expect("non-empty trace").h
    }
}

fn step(p: &GruParams, x: Option<ArrayView1<'_, f64>>, h_prev: ArrayView1<'_, f64>) -> StepCache {
    let mut az = p.u_z.dot(&h_prev) + &p.b_z;
    let mut ar = p.u_r.dot(&h_prev) + &p.b_r;
    if let Some(x) = x {
        az += &p.w_z.dot(&x);
        ar += &p.w_r.dot(&x);
    }
    let z = az.mapv(sigmoid);
    let r = ar.mapv(sigmoid);
    let rh = &r * &h_prev;
    let mut ah = p.u_h.dot(&rh) + &p.b_h;
    if let Some(x) = x {
        ah += &p.w_h.dot(&x);
    }
    let cand = ah.mapv(f64::tanh);
    let mut h = Array1::zeros(h_prev.len());
    Zip::from(&mut h)
        .and(&z)
        .and(&h_prev)
        .and(&cand)
        .for_each(|h, &z, &hp, &c| *h = (1.0 - z) * hp + z * c);
    StepCache {
        h_prev: h_prev.to_owned(),
        z,
        r,
        cand,
        h,
    }
}

fn check_input(p: &GruParams, input: &GruInput<'_>, h0_len: usize) -> Result<()> {
    if let GruInput::Frames(x) = input {
        if x.ncols() != p.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "input has {} features, GRU expects {}",
                x.ncols(),
                p.input_dim()
            )));
        }
    }
    if h0_len != p.hidden_dim() {
        return Err(Error::ShapeMismatch(format!(
            "hidden state has {h0_len} units, GRU has {}",
            p.hidden_dim()
        )));
    }
    Ok(())
}

/// One GRU update.
pub fn gru_step(
    p: &GruParams,
    x: ArrayView1<'_, f64>,
    h_prev: ArrayView1<'_, f64>,
) -> Result<HiddenState> {
    if x.len() != p.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "input has {} features, GRU expects {}",
            x.len(),
            p.input_dim()
        )));
    }
    if h_prev.len() != p.hidden_dim() {
        return Err(Error::ShapeMismatch(format!(
            "hidden state has {} units, GRU has {}",
            h_prev.len(),
            p.hidden_dim()
        )));
    }
    Ok(step(p, Some(x), h_prev).h)
}

/// Runs the GRU over every step of `input` starting from `h0`.
pub fn gru_forward(
    p: &GruParams,
    input: GruInput<'_>,
    h0: ArrayView1<'_, f64>,
) -> Result<GruTrace> {
    check_input(p, &input, h0.len())?;
    if input.steps() == 0 {
        return Err(Error::ShapeMismatch("GRU input has no steps".into()));
    }
    let mut steps: Vec<StepCache> = Vec::with_capacity(input.steps());
    for t in 0..input.steps() {
        let c = match steps.last() {
            Some(prev) => step(p, input.frame(t), prev.h.view()),
            None => step(p, input.frame(t), h0),
        };
        steps.push(c);
    }
    Ok(GruTrace { steps })
}

fn add_outer(m: &mut Array2<f64>, a: &Array1<f64>, b: ArrayView1<'_, f64>) {
    Zip::from(m.rows_mut()).and(a).for_each(|mut row, &ai| {
        if ai != 0.0 {
            row.scaled_add(ai, &b);
        }
    });
}

/// Backpropagation through time.
///
/// `dh` holds the external loss gradient with respect to each emitted state
/// `h_t` (`T x H`). Returns parameter gradients and the gradient with respect
/// to the initial state `h0`.
pub fn gru_backward(
    p: &GruParams,
    input: GruInput<'_>,
    trace: &GruTrace,
    dh: &Array2<f64>,
) -> Result<(GruParams, HiddenState)> {
    let h = p.hidden_dim();
    if dh.dim() != (trace.len(), h) || input.steps() != trace.len() {
        return Err(Error::ShapeMismatch(format!(
            "state gradient is {:?}, trace has {} steps of {h} units",
            dh.dim(),
            trace.len()
        )));
    }
    let mut g = p.zeros_like();
    let mut carry: Array1<f64> = Array1::zeros(h);
    for t in (0..trace.len()).rev() {
        let c = &trace.steps[t];
        let x = input.frame(t);
        let dh_t = &carry + &dh.row(t);

        // h = (1 - z) h_prev + z cand
        let dz = &dh_t * &(&c.cand - &c.h_prev);
        let dcand = &dh_t * &c.z;
        let mut dh_prev = &dh_t * &c.z.mapv(|z| 1.0 - z);

        let da_h = &dcand * &c.cand.mapv(|v| 1.0 - v * v);
        let rh = &c.r * &c.h_prev;
        add_outer(&mut g.u_h, &da_h, rh.view());
        g.b_h += &da_h;
        let drh = p.u_h.t().dot(&da_h);
        let dr = &drh * &c.h_prev;
        dh_prev += &(&drh * &c.r);

        let da_z = &dz * &c.z.mapv(|z| z * (1.0 - z));
        add_outer(&mut g.u_z, &da_z, c.h_prev.view());
        g.b_z += &da_z;
        dh_prev += &p.u_z.t().dot(&da_z);

        let da_r = &dr * &c.r.mapv(|r| r * (1.0 - r));
        add_outer(&mut g.u_r, &da_r, c.h_prev.view());
        g.b_r += &da_r;
        dh_prev += &p.u_r.t().dot(&da_r);

        if let Some(x) = x {
            add_outer(&mut g.w_h, &da_h, x);
            add_outer(&mut g.w_z, &da_z, x);
            add_outer(&mut g.w_r, &da_r, x);
        }
        carry = dh_prev;
    }
    Ok((g, carry))
}
