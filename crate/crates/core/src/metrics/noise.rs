use serde::{Deserialize, Serialize};

use super::check_len;
use super::classification::f1_from;
use crate::error::{Error, Result};
use crate::refinement::ActionKind;

/// How well a set of actions surfaces wrong weak labels, and how many
/// correct weak labels it wastes on human queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDetectionReport {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    /// Share of correctly weak-labeled instances sent to QUERY or REMOVE.
    pub frac_uq: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub n_correct_weak: usize,
    pub n_correct_weak_queried: usize,
}

/// Noise is `weak != truth`; an instance is detected when its action is
/// FLIP, QUERY or REMOVE. FLIP does not count toward `frac_uq`.
pub fn noise_detection(actions: &[ActionKind], weak: &[u8], truth: &[u8]) -> Result<NoiseDetectionReport> {
    check_len(actions.len(), weak.len())?;
    check_len(weak.len(), truth.len())?;
    if actions.is_empty() {
        return Err(Error::Empty("noise evaluation set"));
    }
    let (mut tp, mut fp, mut fn_, mut correct, mut wasted) = (0, 0, 0, 0, 0);
    for ((a, &w), &t) in actions.iter().zip(weak).zip(truth) {
        let noisy = w != t;
        match (noisy, a.is_detection()) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => {}
        }
        if !noisy {
            correct += 1;
            if a.is_query() {
                wasted += 1;
            }
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(NoiseDetectionReport {
        recall: ratio(tp, tp + fn_),
        precision: ratio(tp, tp + fp),
        f1: f1_from(tp, fp, fn_),
        frac_uq: ratio(wasted, correct),
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        n_correct_weak: correct,
        n_correct_weak_queried: wasted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActionKind::*;

    #[test]
    fn query_everything() {
        let weak = [1, 0, 1, 0, 0];
        let truth = [1, 1, 0, 0, 0];
        let r = noise_detection(&[Query; 5], &weak, &truth).unwrap();
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.frac_uq, 1.0);
        assert_eq!(r.precision, 2.0 / 5.0);
    }

    #[test]
    fn detect_nothing() {
        let r = noise_detection(&[Retain; 3], &[1, 0, 1], &[0, 0, 1]).unwrap();
        assert_eq!(r.recall, 0.0);
        assert_eq!(r.frac_uq, 0.0);
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn frac_uq_counts_queries_on_correct_labels_only() {
        // 10 correct weak labels, 3 of them queried, 1 flipped
        let mut actions = vec![Retain; 10];
        actions[0] = Query;
        actions[1] = Remove;
        actions[2] = Query;
        actions[3] = Flip;
        let weak = [0u8; 10];
        let r = noise_detection(&actions, &weak, &weak).unwrap();
        assert!((r.frac_uq - 0.3).abs() < 1e-12);
        assert_eq!(r.false_positives, 4);
    }

    #[test]
    fn empty_set_errors() {
        assert!(noise_detection(&[], &[], &[]).is_err());
    }
}
