use std::cmp::Ordering;

use super::check_len;
use crate::error::{Error, Result};

fn class_counts(labels: &[u8], what: &'static str) -> Result<(usize, usize)> {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass { what });
    }
    Ok((pos, neg))
}

/// Area under the precision-recall step curve: `Σ (R_n − R_{n−1}) · P_n`
/// over descending score thresholds, tied scores forming one step.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_len(scores.len(), labels.len())?;
    let (n_pos, _) = class_counts(labels, "average precision")?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]].total_cmp(&s) == Ordering::Equal {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// ROC AUC as the Mann-Whitney statistic: the probability a random positive
/// outscores a random negative, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_len(scores.len(), labels.len())?;
    let (n_pos, n_neg) = class_counts(labels, "ROC AUC")?;
    let ranks = super::agreement::average_ranks(scores);
    let pos_rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1)
        .map(|(r, _)| r)
        .sum();
    let n_pos_f = n_pos as f64;
    Ok((pos_rank_sum - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_ranking() {
        let s = [0.9, 0.8, 0.2, 0.1];
        let l = [1, 1, 0, 0];
        assert_eq!(average_precision(&s, &l).unwrap(), 1.0);
        assert_eq!(roc_auc(&s, &l).unwrap(), 1.0);
    }

    #[test]
    fn interleaved_ranking_step_sum() {
        // P@1 = 1, P@3 = 2/3
        let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]).unwrap();
        assert_abs_diff_eq!(ap, 0.5 + 0.5 * 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn all_ties() {
        let s = [0.3; 6];
        let l = [1, 0, 1, 0, 0, 0];
        assert_eq!(roc_auc(&s, &l).unwrap(), 0.5);
        assert_abs_diff_eq!(average_precision(&s, &l).unwrap(), 2.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(matches!(roc_auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass { .. })));
        assert!(matches!(average_precision(&[0.1, 0.2], &[0, 0]), Err(Error::SingleClass { .. })));
    }

    #[test]
    fn length_mismatch() {
        assert!(roc_auc(&[0.1], &[1, 0]).is_err());
    }
}
