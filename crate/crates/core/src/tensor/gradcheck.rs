//! Central-difference gradient verification.

use serde::Serialize;

use super::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub op_name: String,
    pub max_rel_error: f64,
    pub passed: bool,
    /// Number of input coordinates compared.
    pub checked: usize,
}

/// Compares the reverse-mode gradient of a scalar-valued `op` at `input`
/// with central differences, over every coordinate of `input`.
///
/// The error per coordinate is `|analytic − numeric| / max(1, |numeric|)`.
pub fn finite_diff_check<F>(
    op_name: &str,
    op: F,
    input: &Tensor,
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&Tensor) -> Result<Tensor>,
{
    finite_diff_check_at(op_name, op, input, eps, tol, None)
}

/// Like [`finite_diff_check`], restricted to the listed flat coordinates.
pub fn finite_diff_check_at<F>(
    op_name: &str,
    op: F,
    input: &Tensor,
    eps: f64,
    tol: f64,
    coords: Option<&[usize]>,
) -> Result<GradCheckReport>
where
    F: Fn(&Tensor) -> Result<Tensor>,
{
    if !(eps > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {eps}")));
    }
    let shape = input.shape().to_vec();
    let base = input.to_vec();

    let x = Tensor::parameter(base.clone(), &shape);
    let out = op(&x)?;
    if out.numel() != 1 {
        return Err(Error::NonScalarLoss(out.shape().to_vec()));
    }
    out.backward()?;
    let analytic = x.grad_vec().unwrap_or_else(|| vec![0.0; base.len()]);

    let eval = |v: Vec<f64>| -> Result<f64> { Ok(op(&Tensor::new(v, &shape))?.item()) };
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..base.len()).collect();
            &all
        }
    };

    let mut max_rel_error: f64 = 0.0;
    for &i in coords {
        let mut plus = base.clone();
        plus[i] += eps;
        let mut minus = base.clone();
        minus[i] -= eps;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * eps);
        let err = (analytic[i] - numeric).abs() / numeric.abs().max(1.0);
        if err.is_nan() {
            max_rel_error = f64::NAN;
            break;
        }
        max_rel_error = max_rel_error.max(err);
    }
    Ok(GradCheckReport {
        op_name: op_name.to_string(),
        max_rel_error,
        passed: max_rel_error < tol,
        checked: coords.len(),
    })
}
