use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::label::{FineLabel, N_FINE};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FineConfig {
    pub hidden: usize,
    /// Weight each class's loss by `N / (K * n_class)`.
    pub class_weighting: bool,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for FineConfig {
    fn default() -> Self {
        FineConfig {
            hidden: 64,
            class_weighting: true,
            epochs: 40,
            learning_rate: 0.05,
            momentum: 0.9,
            l2: 0.03,
            batch_size: 16,
            seed: 13,
        }
    }
}

/// Human-labeled representations used as class prototypes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrototypeSet {
    pub representations: Vec<Vec<f64>>,
    pub labels: Vec<FineLabel>,
}

impl PrototypeSet {
    pub fn new(representations: Vec<Vec<f64>>, labels: Vec<FineLabel>) -> Result<Self> {
        if representations.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: representations.len(),
                right: labels.len(),
            });
        }
        if let Some(first) = representations.first() {
            let dim = first.len();
            if let Some(bad) = representations.iter().find(|r| r.len() != dim) {
                return Err(Error::Dimension {
                    expected: dim,
                    got: bad.len(),
                });
            }
        }
        Ok(PrototypeSet { representations, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.representations.first().map_or(0, Vec::len)
    }

    pub fn class_counts(&self) -> [usize; N_FINE] {
        let mut counts = [0; N_FINE];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    pub fn subset(&self, idx: &[usize]) -> PrototypeSet {
        PrototypeSet {
            representations: idx.iter().map(|&i| self.representations[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Per-class loss weights `N / (K * n_c)` over the K present classes.
pub fn class_weights(counts: &[usize; N_FINE]) -> [f64; N_FINE] {
    let n: usize = counts.iter().sum();
    let k = counts.iter().filter(|&&c| c > 0).count();
    let mut w = [0.0; N_FINE];
    for c in 0..N_FINE {
        if counts[c] > 0 {
            w[c] = n as f64 / (k as f64 * counts[c] as f64);
        }
    }
    w
}

/// One-hidden-layer ReLU network with a softmax over the classes seen in
/// training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineClassifier {
    dim: usize,
    hidden: usize,
    /// `hidden x dim`, row-major.
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// `N_FINE x hidden`, row-major.
    w2: Vec<f64>,
    b2: Vec<f64>,
    mean: Vec<f64>,
    std: Vec<f64>,
    present: [bool; N_FINE],
    pub config: FineConfig,
}

struct Forward {
    hidden: Vec<f64>,
    probs: [f64; N_FINE],
}

impl FineClassifier {
    pub fn train(protos: &PrototypeSet, config: &FineConfig) -> Result<Self> {
        let counts = protos.class_counts();
        if counts.iter().filter(|&&c| c > 0).count() < 2 {
            return Err(Error::SingleClass {
                what: "fine-grained prototypes",
            });
        }
        let dim = protos.dim();
        let n = protos.len();
        let (mean, std) = standardization(&protos.representations, dim);
        let xs: Vec<Vec<f64>> = protos
            .representations
            .iter()
            .map(|r| r.iter().zip(&mean).zip(&std).map(|((v, m), s)| (v - m) / s).collect())
            .collect();
        let weights = if config.class_weighting {
            class_weights(&counts)
        } else {
            [1.0; N_FINE]
        };

        let h = config.hidden;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let a1 = (6.0 / (dim + h) as f64).sqrt();
        let a2 = (6.0 / (h + N_FINE) as f64).sqrt();
        let mut model = FineClassifier {
            dim,
            hidden: h,
            w1: (0..h * dim).map(|_| rng.random_range(-a1..a1)).collect(),
            b1: vec![0.0; h],
            w2: (0..N_FINE * h).map(|_| rng.random_range(-a2..a2)).collect(),
            b2: vec![0.0; N_FINE],
            mean,
            std,
            present: counts.map(|c| c > 0),
            config: *config,
        };

        let mut vel_w1 = vec![0.0; model.w1.len()];
        let mut vel_b1 = vec![0.0; h];
        let mut vel_w2 = vec![0.0; model.w2.len()];
        let mut vel_b2 = vec![0.0; N_FINE];
        let mut order: Vec<usize> = (0..n).collect();
        let batch = config.batch_size.max(1);
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                let mut g_w1 = vec![0.0; model.w1.len()];
                let mut g_b1 = vec![0.0; h];
                let mut g_w2 = vec![0.0; model.w2.len()];
                let mut g_b2 = vec![0.0; N_FINE];
                for &i in chunk {
                    let x = &xs[i];
                    let y = protos.labels[i].index();
                    let fwd = model.forward(x);
                    let scale = weights[y] / chunk.len() as f64;
                    let mut d_out = [0.0; N_FINE];
                    for c in 0..N_FINE {
                        if model.present[c] {
                            d_out[c] = scale * (fwd.probs[c] - f64::from(u8::from(c == y)));
                        }
                    }
                    let mut d_hidden = vec![0.0; h];
                    for c in 0..N_FINE {
                        if d_out[c] == 0.0 {
                            continue;
                        }
                        g_b2[c] += d_out[c];
                        let row = &model.w2[c * h..(c + 1) * h];
                        for j in 0..h {
                            g_w2[c * h + j] += d_out[c] * fwd.hidden[j];
                            d_hidden[j] += d_out[c] * row[j];
                        }
                    }
                    for j in 0..h {
                        if fwd.hidden[j] <= 0.0 {
                            continue;
                        }
                        g_b1[j] += d_hidden[j];
                        let g_row = &mut g_w1[j * dim..(j + 1) * dim];
                        for (g, xv) in g_row.iter_mut().zip(x) {
                            *g += d_hidden[j] * xv;
                        }
                    }
                }
                let lr = config.learning_rate;
                let mu = config.momentum;
                step(&mut model.w1, &mut vel_w1, &g_w1, lr, mu, config.l2);
                step(&mut model.b1, &mut vel_b1, &g_b1, lr, mu, 0.0);
                step(&mut model.w2, &mut vel_w2, &g_w2, lr, mu, config.l2);
                step(&mut model.b2, &mut vel_b2, &g_b2, lr, mu, 0.0);
            }
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let h = self.hidden;
        let hidden: Vec<f64> = (0..h)
            .map(|j| {
                let row = &self.w1[j * self.dim..(j + 1) * self.dim];
                (self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()).max(0.0)
            })
            .collect();
        let mut logits = [f64::NEG_INFINITY; N_FINE];
        for c in 0..N_FINE {
            if self.present[c] {
                let row = &self.w2[c * h..(c + 1) * h];
                logits[c] = self.b2[c] + row.iter().zip(&hidden).map(|(w, v)| w * v).sum::<f64>();
            }
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs = logits.map(|z| if z.is_finite() { (z - max).exp() } else { 0.0 });
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        Forward { hidden, probs }
    }

    pub fn predict_proba(&self, representation: &[f64]) -> Result<[f64; N_FINE]> {
        if representation.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: representation.len(),
            });
        }
        let x: Vec<f64> = representation
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect();
        Ok(self.forward(&x).probs)
    }

    pub fn predict(&self, representation: &[f64]) -> Result<FineLabel> {
        let probs = self.predict_proba(representation)?;
        let best = (0..N_FINE)
            .filter(|&c| self.present[c])
            .max_by(|&a, &b| probs[a].total_cmp(&probs[b]).then(b.cmp(&a)))
            .expect("at least two classes present");
        Ok(FineLabel::ALL[best])
    }
}

fn standardization(rows: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len().max(1) as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; dim];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m).powi(2) / n;
        }
    }
    let std = var.into_iter().map(|v| if v > 1e-12 { v.sqrt() } else { 1.0 }).collect();
    (mean, std)
}

fn step(params: &mut [f64], velocity: &mut [f64], grad: &[f64], lr: f64, momentum: f64, l2: f64) {
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grad) {
        *v = momentum * *v - lr * (g + l2 * *p);
        *p += *v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_counts_give_unit_weights() {
        let w = class_weights(&[5, 5, 5, 0, 0, 0, 0]);
        assert_eq!(&w[..3], &[1.0, 1.0, 1.0]);
        assert_eq!(w[3], 0.0);
    }

    #[test]
    fn inverse_frequency_weights() {
        let w = class_weights(&[30, 10, 0, 0, 0, 0, 0]);
        assert!((w[0] - 40.0 / 60.0).abs() < 1e-12);
        assert!((w[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_rejected() {
        let p = PrototypeSet::new(vec![vec![0.0], vec![1.0]], vec![FineLabel::False; 2]).unwrap();
        assert!(FineClassifier::train(&p, &FineConfig::default()).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = PrototypeSet::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![FineLabel::False, FineLabel::True]).unwrap();
        let m = FineClassifier::train(&p, &FineConfig::default()).unwrap();
        assert!(matches!(m.predict(&[1.0]), Err(Error::Dimension { expected: 2, got: 1 })));
    }
}
