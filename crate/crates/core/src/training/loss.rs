use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One-vs-rest squared hinge loss.
///
/// Targets are `+1` for the labelled class and `-1` elsewhere; the loss is the
/// mean over all `B·K` entries of `max(0, 1 − t·s)²`.
pub fn squared_hinge_loss(scores: &Tensor, labels: &[usize]) -> Result<Tensor> {
    let &[b, k] = scores.shape() else {
        return Err(Error::ShapeMismatch {
            op: "squared_hinge_loss",
            lhs: scores.shape().to_vec(),
            rhs: vec![labels.len(), 0],
        });
    };
    if labels.len() != b {
        return Err(Error::ShapeMismatch {
            op: "squared_hinge_loss",
            lhs: scores.shape().to_vec(),
            rhs: vec![labels.len()],
        });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::LabelOutOfRange { label, n_classes: k });
    }
    let s = scores.data();
    let n = (b * k) as f64;
    // Signed margins slack: t·max(0, 1 − t·s) per entry.
    let mut slack = vec![0.0; b * k];
    let mut total = 0.0;
    for (bi, &label) in labels.iter().enumerate() {
        for j in 0..k {
            let t = if j == label { 1.0 } else { -1.0 };
            let h = (1.0 - t * s[bi * k + j]).max(0.0);
            total += h * h;
            slack[bi * k + j] = t * h;
        }
    }
    Ok(Tensor::from_op(
        "squared_hinge_loss",
        vec![total / n],
        vec![1],
        &[scores],
        move |g, _| {
            let c = -2.0 * g[0] / n;
            vec![Some(slack.iter().map(|&v| c * v).collect())]
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::finite_diff_check;

    #[test]
    fn satisfied_margins_cost_nothing() {
        let mut row = vec![-2.0; 13];
        row[0] = 2.0;
        let l = squared_hinge_loss(&Tensor::new(row, &[1, 13]), &[0]).unwrap();
        assert_eq!(l.item(), 0.0);
    }

    #[test]
    fn zero_scores_cost_one() {
        let l = squared_hinge_loss(&Tensor::zeros(&[3, 13]), &[0, 5, 12]).unwrap();
        assert_eq!(l.item(), 1.0);
    }

    #[test]
    fn hand_evaluated_pair() {
        // (1 - 0.5)² for the true class, (1 + 0.5)² for the other, averaged.
        let l = squared_hinge_loss(&Tensor::new(vec![0.5, 0.5], &[1, 2]), &[0]).unwrap();
        assert_eq!(l.item(), 1.25);
    }

    #[test]
    fn rejects_bad_labels() {
        let s = Tensor::zeros(&[2, 3]);
        assert!(matches!(
            squared_hinge_loss(&s, &[0, 3]),
            Err(Error::LabelOutOfRange { label: 3, n_classes: 3 })
        ));
        assert!(squared_hinge_loss(&s, &[0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = Tensor::new(vec![0.3, -0.7, 1.9, 0.2, -1.4, 0.6, 0.05, 2.5], &[2, 4]);
        let r = finite_diff_check("hinge", |s| squared_hinge_loss(s, &[2, 0]), &s, 1e-6, 1e-6).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
