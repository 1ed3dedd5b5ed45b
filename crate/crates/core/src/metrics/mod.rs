//! Ranking, classification, noise-detection and agreement metrics.
//!
//! The positive class is misinformation (`1`) throughout.

mod agreement;
mod classification;
mod noise;
mod ranking;

pub use agreement::{adjusted_rand_index, cohens_kappa, spearman};
pub use classification::{accuracy, f1_scores, multiclass_f1, weighted_f1, ConfusionMatrix};
pub use noise::{noise_detection, NoiseDetectionReport};
pub use ranking::{average_precision, roc_auc};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Detection quality on a labeled evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ap: f64,
    pub auc: f64,
    pub f1: f64,
    pub macro_f1: f64,
}

impl MetricsReport {
    /// Scores are misinformation probabilities; hard predictions use
    /// `score >= threshold`.
    pub fn compute(scores: &[f64], labels: &[u8], threshold: f64) -> Result<Self> {
        let preds: Vec<u8> = scores.iter().map(|&s| u8::from(s >= threshold)).collect();
        let (f1, macro_f1) = f1_scores(&preds, labels)?;
        Ok(MetricsReport {
            ap: average_precision(scores, labels)?,
            auc: roc_auc(scores, labels)?,
            f1,
            macro_f1,
        })
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub(crate) fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(crate::Error::LengthMismatch { left: a, right: b })
    } else {
        Ok(())
    }
}
