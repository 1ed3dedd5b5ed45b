use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{CascadeFeatures, N_STATS};
use super::threshold::select_threshold;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            learning_rate: 2.0,
            l2: 1e-4,
            epochs: 25,
            batch_size: 32,
            seed: 7,
        }
    }
}

/// Model output for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// `[p(reliable), p(misinformation)]`.
    pub probs: [f64; 2],
    pub entropy: f64,
}

impl Prediction {
    pub fn from_prob_misinfo(p: f64) -> Self {
        let probs = [1.0 - p, p];
        Prediction {
            probs,
            entropy: entropy(&probs),
        }
    }

    pub fn prob_misinfo(&self) -> f64 {
        self.probs[1]
    }
}

/// Shannon entropy in nats, `0 · ln 0 = 0`.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Design matrix of a logistic model: l2-normalized hashed counts followed
/// by standardized statistics, one sparse row per instance.
#[derive(Debug, Clone)]
pub struct Design {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<f64>,
    pub dim: usize,
}

/// `(1/n) Σ logloss + (λ/2) ‖w‖²`; the bias is not regularized.
#[derive(Debug, Clone)]
pub struct LogisticObjective<'a> {
    pub design: &'a Design,
    pub l2: f64,
}

impl LogisticObjective<'_> {
    pub fn value(&self, weights: &[f64], bias: f64) -> f64 {
        let n = self.design.rows.len() as f64;
        let loss: f64 = self
            .design
            .rows
            .iter()
            .zip(&self.design.labels)
            .map(|(row, &y)| {
                let z = dot(weights, row) + bias;
                softplus(z) - y * z
            })
            .sum();
        loss / n + 0.5 * self.l2 * weights.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn gradient(&self, weights: &[f64], bias: f64) -> (Vec<f64>, f64) {
        let n = self.design.rows.len() as f64;
        let mut g: Vec<f64> = weights.iter().map(|w| self.l2 * w).collect();
        let mut gb = 0.0;
        for (row, &y) in self.design.rows.iter().zip(&self.design.labels) {
            let r = (sigmoid(dot(weights, row) + bias) - y) / n;
            for &(j, x) in row {
                g[j] += r * x;
            }
            gb += r;
        }
        (g, gb)
    }
}

fn dot(weights: &[f64], row: &[(usize, f64)]) -> f64 {
    row.iter().map(|&(j, x)| weights[j] * x).sum()
}

/// Linear detector over hashed cascade text and cascade statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub format: String,
    pub version: u32,
    pub hash_dim: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub stats_mean: [f64; N_STATS],
    pub stats_std: [f64; N_STATS],
    pub train_config: DetectorConfig,
    /// Full-batch objective after each accepted epoch.
    pub loss_history: Vec<f64>,
    decision_threshold: f64,
}

pub const MODEL_FORMAT: &str = "misinfo-refine/detector";

impl DetectorModel {
    /// Fits the model by seeded mini-batch gradient descent.
    ///
    /// After every epoch the full-batch objective is evaluated; an epoch
    /// that would increase it is rolled back and the step size halved, so
    /// `loss_history` never increases.
    pub fn train(data: &[&CascadeFeatures], labels: &[u8], hash_dim: usize, config: &DetectorConfig) -> Result<Self> {
        if data.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: labels.len(),
            });
        }
        let pos = labels.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == labels.len() {
            return Err(Error::SingleClass { what: "detector training" });
        }
        let (stats_mean, stats_std) = standardization(data);
        let mut model = DetectorModel {
            format: MODEL_FORMAT.to_string(),
            version: 1,
            hash_dim,
            weights: vec![0.0; hash_dim + N_STATS],
            bias: 0.0,
            stats_mean,
            stats_std,
            train_config: *config,
            loss_history: Vec::with_capacity(config.epochs),
            decision_threshold: 0.5,
        };
        let design = Design {
            rows: data.iter().map(|f| model.design_row(f)).collect(),
            labels: labels.iter().map(|&l| f64::from(l)).collect(),
            dim: hash_dim + N_STATS,
        };
        let objective = LogisticObjective {
            design: &design,
            l2: config.l2,
        };

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..design.rows.len()).collect();
        let mut lr = config.learning_rate;
        let mut current = objective.value(&model.weights, model.bias);
        let batch = config.batch_size.max(1);
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut weights = model.weights.clone();
            let mut bias = model.bias;
            for chunk in order.chunks(batch) {
                let b = chunk.len() as f64;
                let decay = 1.0 - lr * config.l2;
                weights.iter_mut().for_each(|w| *w *= decay);
                let mut gb = 0.0;
                let residuals: Vec<f64> = chunk
                    .iter()
                    .map(|&i| (sigmoid(dot(&weights, &design.rows[i]) + bias) - design.labels[i]) / b)
                    .collect();
                for (&i, r) in chunk.iter().zip(&residuals) {
                    for &(j, x) in &design.rows[i] {
                        weights[j] -= lr * r * x;
                    }
                    gb += r;
                }
                bias -= lr * gb;
            }
            let value = objective.value(&weights, bias);
            if value <= current {
                model.weights = weights;
                model.bias = bias;
                current = value;
            } else {
                lr *= 0.5;
            }
            model.loss_history.push(current);
        }
        Ok(model)
    }

    pub fn design_row(&self, f: &CascadeFeatures) -> Vec<(usize, f64)> {
        let norm = f.hashed_text.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        let mut row: Vec<(usize, f64)> = if norm > 0.0 {
            f.hashed_text
                .iter()
                .filter(|(j, _)| (*j as usize) < self.hash_dim)
                .map(|&(j, v)| (j as usize, v / norm))
                .collect()
        } else {
            Vec::new()
        };
        for k in 0..N_STATS {
            row.push((self.hash_dim + k, (f.stats[k] - self.stats_mean[k]) / self.stats_std[k]));
        }
        row
    }

    pub fn prob_misinfo(&self, f: &CascadeFeatures) -> f64 {
        sigmoid(dot(&self.weights, &self.design_row(f)) + self.bias)
    }

    pub fn predict(&self, f: &CascadeFeatures) -> Prediction {
        Prediction::from_prob_misinfo(self.prob_misinfo(f))
    }

    /// Scores many instances in parallel, preserving input order.
    pub fn predict_batch(&self, data: &[&CascadeFeatures]) -> Vec<Prediction> {
        data.par_iter().map(|f| self.predict(f)).collect()
    }

    pub fn decision_threshold(&self) -> f64 {
        self.decision_threshold
    }

    pub fn predicted_label(&self, p: &Prediction) -> u8 {
        u8::from(p.prob_misinfo() >= self.decision_threshold)
    }

    /// Sets the decision threshold to the Youden-optimal cut on a labeled
    /// validation set and returns it.
    pub fn calibrate_threshold(&mut self, validation: &[&CascadeFeatures], labels: &[u8]) -> Result<f64> {
        let scores: Vec<f64> = self.predict_batch(validation).iter().map(Prediction::prob_misinfo).collect();
        let t = select_threshold(&scores, labels)?;
        self.decision_threshold = t;
        Ok(t)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: DetectorModel = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT {
            return Err(Error::schema("detector model", "format", format!("unexpected `{}`", model.format)));
        }
        if model.weights.len() != model.hash_dim + N_STATS {
            return Err(Error::Dimension {
                expected: model.hash_dim + N_STATS,
                got: model.weights.len(),
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::write(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn standardization(data: &[&CascadeFeatures]) -> ([f64; N_STATS], [f64; N_STATS]) {
    let n = data.len().max(1) as f64;
    let mut mean = [0.0; N_STATS];
    let mut std = [0.0; N_STATS];
    for f in data {
        for k in 0..N_STATS {
            mean[k] += f.stats[k] / n;
        }
    }
    for f in data {
        for k in 0..N_STATS {
            std[k] += (f.stats[k] - mean[k]).powi(2) / n;
        }
    }
    for s in &mut std {
        *s = if *s > 1e-12 { s.sqrt() } else { 1.0 };
    }
    (mean, std)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_values() {
        assert!((entropy(&[0.5, 0.5]) - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
        assert!((entropy(&[0.9, 0.1]) - 0.325_082_973_391_448_2).abs() < 1e-12);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
        assert!(softplus(-800.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn prediction_probs_sum_to_one() {
        let p = Prediction::from_prob_misinfo(0.123);
        assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
