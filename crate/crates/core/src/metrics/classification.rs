use super::check_len;
use crate::error::Result;

/// Binary confusion counts with misinformation as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_labels(pred: &[u8], truth: &[u8]) -> Result<Self> {
        check_len(pred.len(), truth.len())?;
        let mut m = ConfusionMatrix::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p == 1, t == 1) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, false) => m.tn += 1,
                (false, true) => m.fn_ += 1,
            }
        }
        Ok(m)
    }

    pub fn f1_positive(&self) -> f64 {
        f1_from(self.tp, self.fp, self.fn_)
    }

    pub fn f1_negative(&self) -> f64 {
        f1_from(self.tn, self.fn_, self.fp)
    }
}

/// `2tp / (2tp + fp + fn)`, zero for a class that is never predicted nor
/// present.
pub(crate) fn f1_from(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// `(F1 of class 1, mean of the two class-wise F1 scores)`.
pub fn f1_scores(pred: &[u8], truth: &[u8]) -> Result<(f64, f64)> {
    let m = ConfusionMatrix::from_labels(pred, truth)?;
    let pos = m.f1_positive();
    Ok((pos, (pos + m.f1_negative()) / 2.0))
}

/// Per-class F1 for labels in `0..n_classes`.
pub fn multiclass_f1(pred: &[usize], truth: &[usize], n_classes: usize) -> Result<Vec<f64>> {
    check_len(pred.len(), truth.len())?;
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    Ok((0..n_classes).map(|c| f1_from(tp[c], fp[c], fn_[c])).collect())
}

/// Support-weighted mean of per-class F1.
pub fn weighted_f1(pred: &[usize], truth: &[usize], n_classes: usize) -> Result<f64> {
    let f1 = multiclass_f1(pred, truth, n_classes)?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let mut support = vec![0usize; n_classes];
    for &t in truth {
        support[t] += 1;
    }
    Ok(f1
        .iter()
        .zip(&support)
        .map(|(f, &s)| f * s as f64)
        .sum::<f64>()
        / truth.len() as f64)
}

pub fn accuracy<T: PartialEq>(pred: &[T], truth: &[T]) -> Result<f64> {
    check_len(pred.len(), truth.len())?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_predictions() {
        assert_eq!(f1_scores(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn all_negative_predictions_on_balanced_truth() {
        let (pos, macro_f1) = f1_scores(&[0, 0, 0, 0], &[1, 1, 0, 0]).unwrap();
        assert_eq!(pos, 0.0);
        // negative class: tp=2, fn=0, fp=2 -> 4/6
        assert_abs_diff_eq!(macro_f1, (0.0 + 2.0 / 3.0) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn multiclass_and_weighted() {
        let truth = [0, 0, 1, 2];
        let pred = [0, 1, 1, 2];
        let f1 = multiclass_f1(&pred, &truth, 4).unwrap();
        assert_abs_diff_eq!(f1[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f1[1], 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(f1[2], 1.0);
        assert_eq!(f1[3], 0.0);
        let w = weighted_f1(&pred, &truth, 4).unwrap();
        assert_abs_diff_eq!(w, (2.0 * 2.0 / 3.0 + 2.0 / 3.0 + 1.0) / 4.0, epsilon = 1e-12);
        assert_eq!(accuracy(&pred, &truth).unwrap(), 0.75);
    }
}
