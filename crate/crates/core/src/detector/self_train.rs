use serde::{Deserialize, Serialize};

use super::features::CascadeFeatures;
use super::model::{DetectorConfig, DetectorModel, Prediction};
use crate::error::{Error, Result};
use crate::metrics::f1_scores;
use crate::refinement::MState;

/// Linear-interpolated quantile (`q` in `[0, 1]`) of unsorted values.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfTrainConfig {
    /// Entropies above this quantile count as high entropy.
    pub entropy_quantile: f64,
    /// Minimum validation Macro-F1 gain to keep iterating.
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for SelfTrainConfig {
    fn default() -> Self {
        SelfTrainConfig {
            entropy_quantile: 0.8,
            eps: 0.005,
            max_iter: 5,
        }
    }
}

/// Borrowed features with binary labels.
#[derive(Debug, Clone, Copy)]
pub struct LabeledSet<'a> {
    pub features: &'a [&'a CascadeFeatures],
    pub labels: &'a [u8],
}

/// Model states of instances against given labels: high entropy first,
/// otherwise agreement of the thresholded prediction with the label.
pub fn model_states(model: &DetectorModel, predictions: &[Prediction], labels: &[u8], entropy_quantile: f64) -> Vec<MState> {
    let entropies: Vec<f64> = predictions.iter().map(|p| p.entropy).collect();
    let cut = quantile(&entropies, entropy_quantile);
    predictions
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            if p.entropy > cut {
                MState::LowConfidence
            } else if model.predicted_label(p) == y {
                MState::Consistent
            } else {
                MState::Inconsistent
            }
        })
        .collect()
}

/// Trains, calibrates the threshold on validation, and scores Macro-F1 there.
pub fn fit_and_validate(
    train: LabeledSet<'_>,
    validation: LabeledSet<'_>,
    hash_dim: usize,
    config: &DetectorConfig,
) -> Result<(DetectorModel, f64)> {
    let mut model = DetectorModel::train(train.features, train.labels, hash_dim, config)?;
    model.calibrate_threshold(validation.features, validation.labels)?;
    let preds: Vec<u8> = model
        .predict_batch(validation.features)
        .iter()
        .map(|p| model.predicted_label(p))
        .collect();
    let (_, macro_f1) = f1_scores(&preds, validation.labels)?;
    Ok((model, macro_f1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTrainIteration {
    pub iteration: usize,
    pub n_retained: usize,
    pub n_high_entropy: usize,
    pub n_inconsistent: usize,
    pub decision_threshold: f64,
    pub validation_macro_f1: f64,
}

#[derive(Debug, Clone)]
pub struct SelfTrainOutcome {
    /// Best-validation model.
    pub model: DetectorModel,
    /// Model trained on every weakly labeled instance.
    pub initial_model: DetectorModel,
    pub best_iteration: usize,
    /// Instances the best model was trained on.
    pub retained: Vec<bool>,
    /// States of every original instance under the best model; the
    /// self-training filter removes all but `Consistent`.
    pub final_states: Vec<MState>,
    pub iterations: Vec<SelfTrainIteration>,
    /// Set when filtering emptied a class and the loop halted early.
    pub warning: Option<String>,
}

/// Entropy-filtered self-training.
///
/// Each round trains on the retained set, scores every original instance,
/// and drops those above the entropy quantile plus confident predictions
/// that disagree with their weak label. Stops when validation Macro-F1
/// gains less than `eps` or after `max_iter` rounds.
pub fn self_train(
    dataset: LabeledSet<'_>,
    validation: LabeledSet<'_>,
    hash_dim: usize,
    detector: &DetectorConfig,
    config: &SelfTrainConfig,
) -> Result<SelfTrainOutcome> {
    let n = dataset.features.len();
    if n != dataset.labels.len() {
        return Err(Error::LengthMismatch {
            left: n,
            right: dataset.labels.len(),
        });
    }
    let mut retained = vec![true; n];
    let (model, f1) = fit_and_validate(dataset, validation, hash_dim, detector)?;
    let mut iterations = vec![SelfTrainIteration {
        iteration: 0,
        n_retained: n,
        n_high_entropy: 0,
        n_inconsistent: 0,
        decision_threshold: model.decision_threshold(),
        validation_macro_f1: f1,
    }];
    let initial_model = model.clone();
    let mut best = (model.clone(), f1, 0usize, retained.clone());
    let mut current = model;
    let mut prev_f1 = f1;
    let mut warning = None;

    for iteration in 1..=config.max_iter {
        let preds = current.predict_batch(dataset.features);
        let states = model_states(&current, &preds, dataset.labels, config.entropy_quantile);
        let next: Vec<bool> = states.iter().map(|s| *s == MState::Consistent).collect();
        let feats: Vec<&CascadeFeatures> = dataset.features.iter().zip(&next).filter(|(_, &k)| k).map(|(f, _)| *f).collect();
        let labels: Vec<u8> = dataset.labels.iter().zip(&next).filter(|(_, &k)| k).map(|(l, _)| *l).collect();
        let pos = labels.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == labels.len() {
            warning = Some(format!("iteration {iteration}: retained set lost a class; kept previous model"));
            break;
        }
        let (model, f1) = fit_and_validate(
            LabeledSet {
                features: &feats,
                labels: &labels,
            },
            validation,
            hash_dim,
            detector,
        )?;
        retained = next;
        iterations.push(SelfTrainIteration {
            iteration,
            n_retained: labels.len(),
            n_high_entropy: states.iter().filter(|s| **s == MState::LowConfidence).count(),
            n_inconsistent: states.iter().filter(|s| **s == MState::Inconsistent).count(),
            decision_threshold: model.decision_threshold(),
            validation_macro_f1: f1,
        });
        if f1 > best.1 {
            best = (model.clone(), f1, iteration, retained.clone());
        }
        current = model;
        if f1 - prev_f1 < config.eps {
            break;
        }
        prev_f1 = f1;
    }

    let (model, _, best_iteration, retained) = best;
    let preds = model.predict_batch(dataset.features);
    let final_states = model_states(&model, &preds, dataset.labels, config.entropy_quantile);
    Ok(SelfTrainOutcome {
        model,
        initial_model,
        best_iteration,
        retained,
        final_states,
        iterations,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        let v = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 5.0);
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert!((quantile(&v, 0.8) - 4.2).abs() < 1e-12);
    }

    #[test]
    fn quantile_is_scale_equivariant() {
        let v = [0.1, 0.5, 0.2, 0.69, 0.3];
        assert!((quantile(&v, 0.8) * 3.0 - quantile(&v.map(|x| x * 3.0), 0.8)).abs() < 1e-12);
    }
}
