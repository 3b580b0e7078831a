use super::ParamSet;
use crate::par;

/// Denominator floor for the relative error, so that entries whose true
/// gradient is ~0 are judged on absolute error instead.
pub const DEFAULT_REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckWorst {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    pub worst: Option<GradCheckWorst>,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares `analytic` against central differences of `loss` at `params`,
/// one entry at a time.
pub fn check_gradients<P, F>(
    params: &P,
    analytic: &P,
    loss: F,
    eps: f64,
    floor: f64,
) -> GradCheckReport
where
    P: ParamSet + Clone + Sync,
    F: Fn(&P) -> f64 + Sync + Send,
{
    let layout: Vec<(String, usize)> = params
        .tensors()
        .iter()
        .map(|t| (t.name.to_string(), t.data.len()))
        .collect();
    let mut flat = Vec::new();
    for (ti, (_, n)) in layout.iter().enumerate() {
        flat.extend((0..*n).map(|i| (ti, i)));
    }
    let grads = analytic.tensors();

    let probe = |&(ti, i): &(usize, usize)| -> (f64, f64) {
        let mut p = params.clone();
        let orig = p.tensors()[ti].data[i];
        p.tensors_mut()[ti][i] = orig + eps;
        let up = loss(&p);
        p.tensors_mut()[ti][i] = orig - eps;
        let down = loss(&p);
        let numeric = (up - down) / (2.0 * eps);
        (grads[ti].data[i], numeric)
    };
    let results = par::map(&flat, probe);

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: flat.len(),
        worst: None,
    };
    for (&(ti, i), &(a, n)) in flat.iter().zip(&results) {
        let e = relative_error(a, n, floor);
        if e > report.max_rel_error || report.worst.is_none() || e.is_nan() {
            report.max_rel_error = if e.is_nan() { f64::INFINITY } else { e };
            report.worst = Some(GradCheckWorst {
                tensor: layout[ti].0.clone(),
                index: i,
                analytic: a,
                numeric: n,
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{mse_loss, AffineParams, LossReduction};
    use ndarray::{arr1, arr2, Array2};

    #[test]
    fn affine_readout_gradient() {
        // loss = mse(W h + b, x); dW = g h^T, db = g
        let p = AffineParams {
            w_o: arr2(&[[0.5, -1.0], [2.0, 0.25]]),
            b_o: arr1(&[0.1, -0.2]),
        };
        let h = arr1(&[0.3, -0.7]);
        let x = arr2(&[[1.0, 1.0]]);
        let loss = |p: &AffineParams| {
            let y = p.apply(h.view()).insert_axis(ndarray::Axis(0));
            mse_loss(&y, &x, LossReduction::Mean).unwrap().0
        };
        let y: Array2<f64> = p.apply(h.view()).insert_axis(ndarray::Axis(0));
        let (_, g) = mse_loss(&y, &x, LossReduction::Mean).unwrap();
        let mut grad = p.zeros_like();
        for i in 0..2 {
            grad.b_o[i] = g[[0, i]];
            for j in 0..2 {
                grad.w_o[[i, j]] = g[[0, i]] * h[j];
            }
        }
        let r = check_gradients(&p, &grad, loss, 1e-5, DEFAULT_REL_FLOOR);
        assert_eq!(r.checked, 6);
        assert!(r.passes(1e-7), "{r:?}");

        grad.w_o[[1, 0]] += 0.01;
        let r = check_gradients(&p, &grad, loss, 1e-5, DEFAULT_REL_FLOOR);
        assert_eq!(r.worst.as_ref().unwrap().tensor, "W_o");
        assert!(!r.passes(1e-4));
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0, 1e-6), 0.0);
        assert_eq!(relative_error(2.0, 1.0, 1e-6), 0.5);
        assert_eq!(relative_error(1e-9, 0.0, 1e-6), 1e-3);
    }
}
