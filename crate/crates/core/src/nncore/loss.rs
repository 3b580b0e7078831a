use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How squared reconstruction errors are reduced to a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossReduction {
    /// Divide the summed squared error by `T * F`.
    #[default]
    Mean,
    /// Plain `sum_t ||x_t - y_t||^2`.
    Sum,
}

/// Squared error between output `y` and target `x`, with its gradient
/// with respect to `y`.
pub fn mse_loss(
    y: &Array2<f64>,
    x: &Array2<f64>,
    reduction: LossReduction,
) -> Result<(f64, Array2<f64>)> {
    if y.dim() != x.dim() {
        return Err(Error::ShapeMismatch(format!(
            "output is {:?}, target is {:?}",
            y.dim(),
            x.dim()
        )));
    }
    let norm = match reduction {
        LossReduction::Mean => (y.len() as f64).max(1.0),
        LossReduction::Sum => 1.0,
    };
    let diff = y - x;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / norm;
    let grad = diff.mapv(|d| 2.0 * d / norm);
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn identical_inputs_give_zero() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let (l, g) = mse_loss(&x, &x, LossReduction::Mean).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_case() {
        let (l, g) = mse_loss(&array![[3.0]], &array![[1.0]], LossReduction::Mean).unwrap();
        assert_eq!((l, g[[0, 0]]), (4.0, 4.0));
        let (l, _) =
            mse_loss(&array![[3.0, 0.0]], &array![[1.0, 1.0]], LossReduction::Sum).unwrap();
        assert_eq!(l, 5.0);
    }

    #[test]
    fn shape_mismatch() {
        assert!(mse_loss(&array![[1.0]], &array![[1.0, 2.0]], LossReduction::Mean).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let y = array![[0.3, -1.2, 2.0], [0.5, 0.25, -0.75]];
        let x = array![[1.0, 0.0, -1.0], [0.1, 0.2, 0.3]];
        for red in [LossReduction::Mean, LossReduction::Sum] {
            let (_, g) = mse_loss(&y, &x, red).unwrap();
            let eps = 1e-6;
            for idx in [(0, 0), (0, 2), (1, 1)] {
                let mut yp = y.clone();
                yp[idx] += eps;
                let mut ym = y.clone();
                ym[idx] -= eps;
                let fd = (mse_loss(&yp, &x, red).unwrap().0 - mse_loss(&ym, &x, red).unwrap().0)
                    / (2.0 * eps);
                assert!((fd - g[idx]).abs() / g[idx].abs() < 1e-6, "{red:?} {idx:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric_nonnegative(v in prop::collection::vec(-10.0f64..10.0, 12)) {
            let a = Array2::from_shape_vec((3, 2), v[..6].to_vec()).unwrap();
            let b = Array2::from_shape_vec((3, 2), v[6..].to_vec()).unwrap();
            let (lab, _) = mse_loss(&a, &b, LossReduction::Mean).unwrap();
            let (lba, _) = mse_loss(&b, &a, LossReduction::Mean).unwrap();
            prop_assert_eq!(lab, lba);
            prop_assert!(lab >= 0.0);
            prop_assert_eq!(lab == 0.0, a == b);
        }
    }
}
