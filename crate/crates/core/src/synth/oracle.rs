use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::io::GroundTruth;
use crate::metrics::{MetricsReport, NoiseDetectionReport};
use crate::refinement::ActionKind;
use crate::{Error, Result};

/// A pipeline's verdict on one cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineVerdict {
    pub cascade_id: String,
    pub weak_label: u8,
    pub action: ActionKind,
    pub prob_misinfo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub noise: NoiseDetectionReport,
    pub metrics: MetricsReport,
}

fn safe_div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Recomputes noise detection and classification metrics against ground
/// truth by plain counting: every positive/negative pair for AUC, a walk
/// over each distinct score for AP.
pub fn oracle_report(truth: &[GroundTruth], verdicts: &[PipelineVerdict], threshold: f64) -> Result<OracleReport> {
    if verdicts.is_empty() {
        return Err(Error::Empty("pipeline verdicts"));
    }
    let by_id: HashMap<&str, &GroundTruth> = truth.iter().map(|t| (t.cascade_id.as_str(), t)).collect();
    let mut rows = Vec::with_capacity(verdicts.len());
    for v in verdicts {
        let t = by_id
            .get(v.cascade_id.as_str())
            .ok_or_else(|| Error::InvalidInput(format!("cascade {} has no ground truth", v.cascade_id)))?;
        rows.push((v, t.true_binary));
    }

    let (mut tp, mut fp, mut fn_, mut correct, mut wasted) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for (v, y) in &rows {
        let noisy = v.weak_label != *y;
        let detected = v.action != ActionKind::Retain;
        match (noisy, detected) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => {}
        }
        if !noisy {
            correct += 1;
            if matches!(v.action, ActionKind::Query | ActionKind::Remove) {
                wasted += 1;
            }
        }
    }
    let recall = safe_div(tp as f64, (tp + fn_) as f64);
    let precision = safe_div(tp as f64, (tp + fp) as f64);
    let noise = NoiseDetectionReport {
        recall,
        precision,
        f1: safe_div(2.0 * precision * recall, precision + recall),
        frac_uq: safe_div(wasted as f64, correct as f64),
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        n_correct_weak: correct,
        n_correct_weak_queried: wasted,
    };

    let pos: Vec<f64> = rows.iter().filter(|r| r.1 == 1).map(|r| r.0.prob_misinfo).collect();
    let neg: Vec<f64> = rows.iter().filter(|r| r.1 == 0).map(|r| r.0.prob_misinfo).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass { what: "ground truth" });
    }
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    let auc = wins / (pos.len() * neg.len()) as f64;

    let mut cuts: Vec<f64> = rows.iter().map(|r| r.0.prob_misinfo).collect();
    cuts.sort_by(|a, b| b.total_cmp(a));
    cuts.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for c in cuts {
        let hit = pos.iter().filter(|&&s| s >= c).count() as f64;
        let flagged = rows.iter().filter(|r| r.0.prob_misinfo >= c).count() as f64;
        let r = hit / pos.len() as f64;
        ap += (r - prev_recall) * hit / flagged;
        prev_recall = r;
    }

    let confusion = |cls: u8| {
        let pred = |s: f64| u8::from(s >= threshold);
        let tp = rows.iter().filter(|r| r.1 == cls && pred(r.0.prob_misinfo) == cls).count() as f64;
        let fp = rows.iter().filter(|r| r.1 != cls && pred(r.0.prob_misinfo) == cls).count() as f64;
        let fn_ = rows.iter().filter(|r| r.1 == cls && pred(r.0.prob_misinfo) != cls).count() as f64;
        safe_div(2.0 * tp, 2.0 * tp + fp + fn_)
    };
    let f1 = confusion(1);
    let metrics = MetricsReport {
        ap,
        auc,
        f1,
        macro_f1: (f1 + confusion(0)) / 2.0,
    };
    Ok(OracleReport { noise, metrics })
}
