use crate::error::{Error, Result};

/// Score threshold maximizing Youden's J = TPR − FPR, where an instance is
/// predicted positive when `score >= threshold`.
///
/// Candidates are the observed scores; among equally good candidates the
/// highest wins. J is compared exactly as `tp·N − fp·P`.
pub fn select_threshold(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as i128;
    let n_neg = labels.len() as i128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass { what: "threshold selection" });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (mut tp, mut fp) = (0i128, 0i128);
    let mut best: Option<(i128, f64)> = None;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let j = tp * n_neg - fp * n_pos;
        if best.is_none_or(|(b, _)| j > b) {
            best = Some((j, s));
        }
    }
    Ok(best.expect("nonempty").1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_scores_pick_lowest_positive() {
        let t = select_threshold(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap();
        assert_eq!(t, 0.8);
    }

    #[test]
    fn constant_scores() {
        assert_eq!(select_threshold(&[0.4; 4], &[0, 1, 0, 1]).unwrap(), 0.4);
    }

    #[test]
    fn single_class_errors() {
        assert!(select_threshold(&[0.1, 0.2], &[1, 1]).is_err());
    }
}
