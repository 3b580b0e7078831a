use serde::{Deserialize, Serialize};

use super::ParamSet;
use crate::error::{Error, Result};

/// Step-decayed learning rate: `initial_lr * decay^floor(batch / period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub initial_lr: f64,
    pub decay: f64,
    pub period: usize,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            initial_lr: 1.0,
            decay: 0.95,
            period: 500,
        }
    }
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "initial_lr {} must be > 0",
                self.initial_lr
            )));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "decay {} must be in (0, 1]",
                self.decay
            )));
        }
        if self.period == 0 {
            return Err(Error::InvalidArgument("period must be >= 1".into()));
        }
        Ok(())
    }
}

pub fn lr_at(sched: &LrSchedule, batch_index: usize) -> f64 {
    let k = (batch_index / sched.period.max(1)).min(i32::MAX as usize) as i32;
    sched.initial_lr * sched.decay.powi(k)
}

/// L2 norm over every entry of every tensor.
pub fn global_norm<P: ParamSet>(p: &P) -> f64 {
    p.tensors()
        .iter()
        .flat_map(|t| t.data.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// In-place SGD update with optional global-norm clipping. Returns the factor
/// applied to the gradients (1.0 when not clipped).
pub fn apply_sgd<P: ParamSet>(
    params: &mut P,
    grads: &P,
    lr: f64,
    clip_norm: Option<f64>,
) -> Result<f64> {
    if lr.is_nan() || lr <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "learning rate {lr} must be > 0"
        )));
    }
    if let Some(t) = grads
        .tensors()
        .iter()
        .find(|t| t.data.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::NonFiniteGradient(t.name.to_string()));
    }
    let norm = global_norm(grads);
    let factor = match clip_norm {
        Some(c) if norm > c => c / norm,
        _ => 1.0,
    };
    let step = lr * factor;
    let g = grads.tensors();
    for (dst, src) in params.tensors_mut().into_iter().zip(g) {
        for (p, gv) in dst.iter_mut().zip(src.data) {
            *p -= step * gv;
        }
    }
    Ok(factor)
}

/// Functional form of [`apply_sgd`]: returns the updated parameters.
pub fn sgd_step<P: ParamSet + Clone>(
    params: &P,
    grads: &P,
    lr: f64,
    clip_norm: Option<f64>,
) -> Result<P> {
    let mut next = params.clone();
    apply_sgd(&mut next, grads, lr, clip_norm)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{AffineParams, Tensor};
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2};

    #[derive(Clone, Debug, PartialEq)]
    struct Scalar(Vec<f64>);

    impl ParamSet for Scalar {
        fn tensors(&self) -> Vec<Tensor<'_>> {
            vec![Tensor {
                name: "s",
                shape: &[],
                data: &self.0,
            }]
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
        fn zeros_like(&self) -> Self {
            Scalar(vec![0.0; self.0.len()])
        }
    }

    #[test]
    fn schedule_values() {
        let s = LrSchedule::default();
        assert_eq!(lr_at(&s, 0), 1.0);
        assert_eq!(lr_at(&s, 499), 1.0);
        assert_eq!(lr_at(&s, 500), 0.95);
        assert_abs_diff_eq!(lr_at(&s, 1000), 0.9025, epsilon = 1e-15);
        let mut prev = f64::INFINITY;
        for b in 0..5000 {
            let lr = lr_at(&s, b);
            assert!(lr <= prev);
            if b % 500 != 0 {
                assert_eq!(lr, prev);
            }
            prev = lr;
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(LrSchedule::default().validate().is_ok());
        assert!(LrSchedule {
            decay: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(LrSchedule {
            period: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(LrSchedule {
            initial_lr: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn zero_gradient_is_identity() {
        let p = AffineParams {
            w_o: arr2(&[[1.0, 2.0]]),
            b_o: arr1(&[3.0]),
        };
        let g = p.zeros_like();
        assert_eq!(sgd_step(&p, &g, 1.0, Some(5.0)).unwrap(), p);
    }

    #[test]
    fn scalar_update() {
        let p = sgd_step(&Scalar(vec![1.0]), &Scalar(vec![0.5]), 0.1, None).unwrap();
        assert_abs_diff_eq!(p.0[0], 0.95, epsilon = 1e-15);
    }

    #[test]
    fn clipping_halves_norm_ten_gradient() {
        // (6, 8) has norm 10
        let mut p = Scalar(vec![0.0, 0.0]);
        let f = apply_sgd(&mut p, &Scalar(vec![6.0, 8.0]), 1.0, Some(5.0)).unwrap();
        assert_eq!(f, 0.5);
        assert_eq!(p.0, vec![-3.0, -4.0]);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let r = sgd_step(&Scalar(vec![1.0]), &Scalar(vec![f64::NAN]), 0.1, None);
        assert!(matches!(r, Err(Error::NonFiniteGradient(_))));
        assert!(sgd_step(&Scalar(vec![1.0]), &Scalar(vec![1.0]), 0.0, None).is_err());
    }
}
