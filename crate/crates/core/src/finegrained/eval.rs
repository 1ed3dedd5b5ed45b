use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::label::{FineLabel, N_FINE};
use super::mlp::{FineClassifier, FineConfig, PrototypeSet};
use crate::metrics::{accuracy, mean_std, multiclass_f1, weighted_f1};
use crate::{Error, Result};

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// so every fold holds within one item of its share of every class.
pub fn stratified_folds(labels: &[FineLabel], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for class in FineLabel::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = next % folds;
            next += 1;
        }
    }
    fold_of
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FineMethod {
    Random,
    Majority,
    Unweighted,
    Weighted,
}

impl FineMethod {
    pub const ALL: [FineMethod; 4] = [FineMethod::Random, FineMethod::Majority, FineMethod::Unweighted, FineMethod::Weighted];

    pub fn name(self) -> &'static str {
        match self {
            FineMethod::Random => "Random",
            FineMethod::Majority => "Majority",
            FineMethod::Unweighted => "MLP",
            FineMethod::Weighted => "MLP (class-weighted)",
        }
    }
}

/// Scores of one method on one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScores {
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub per_class_f1: [f64; N_FINE],
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.collect();
        let (mean, std) = mean_std(&v);
        MeanStd { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} +/- {:.3}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineRow {
    pub method: FineMethod,
    pub macro_f1: MeanStd,
    pub weighted_f1: MeanStd,
    pub per_class_f1: Vec<MeanStd>,
    pub accuracy: MeanStd,
    pub folds: Vec<FoldScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineEvaluation {
    pub n_folds: usize,
    pub n_items: usize,
    pub class_counts: [usize; N_FINE],
    pub rows: Vec<FineRow>,
}

impl FineEvaluation {
    pub fn row(&self, method: FineMethod) -> &FineRow {
        self.rows.iter().find(|r| r.method == method).expect("all methods evaluated")
    }

    /// One row per method: macro F1, weighted F1, the seven per-class F1
    /// columns and accuracy, each as `mean +/- std`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["method".to_string(), "macro_f1".into(), "weighted_f1".into()];
        header.extend(FineLabel::ALL.iter().map(|l| format!("f1_{l}")));
        header.push("accuracy".into());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.method.name().to_string(), row.macro_f1.to_string(), row.weighted_f1.to_string()];
            rec.extend(row.per_class_f1.iter().map(ToString::to_string));
            rec.push(row.accuracy.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::write("fine-grained report", e))
    }
}

fn score(pred: &[FineLabel], truth: &[FineLabel], present: &[bool; N_FINE]) -> Result<FoldScores> {
    let p: Vec<usize> = pred.iter().map(|l| l.index()).collect();
    let t: Vec<usize> = truth.iter().map(|l| l.index()).collect();
    let f1 = multiclass_f1(&p, &t, N_FINE)?;
    let k = present.iter().filter(|&&x| x).count();
    let macro_f1 = (0..N_FINE).filter(|&c| present[c]).map(|c| f1[c]).sum::<f64>() / k as f64;
    Ok(FoldScores {
        macro_f1,
        weighted_f1: weighted_f1(&p, &t, N_FINE)?,
        per_class_f1: f1.try_into().expect("N_FINE entries"),
        accuracy: accuracy(pred, truth)?,
    })
}

/// Stratified k-fold evaluation of the classifier against random and
/// majority baselines. Macro F1 averages over the classes present in the
/// prototype set; classes missing from a test fold score 0.
pub fn evaluate_fine(protos: &PrototypeSet, folds: usize, config: &FineConfig) -> Result<FineEvaluation> {
    let counts = protos.class_counts();
    let present = counts.map(|c| c > 0);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::SingleClass {
            what: "fine-grained prototypes",
        });
    }
    if folds < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    let classes: Vec<FineLabel> = FineLabel::ALL.into_iter().filter(|l| present[l.index()]).collect();
    let fold_of = stratified_folds(&protos.labels, folds, config.seed);
    let per_fold: Vec<Vec<FoldScores>> = (0..folds)
        .into_par_iter()
        .map(|f| -> Result<Vec<FoldScores>> {
            let train_idx: Vec<usize> = (0..protos.len()).filter(|&i| fold_of[i] != f).collect();
            let test_idx: Vec<usize> = (0..protos.len()).filter(|&i| fold_of[i] == f).collect();
            let train = protos.subset(&train_idx);
            let test = protos.subset(&test_idx);
            let fold_seed = config.seed.wrapping_add(f as u64 + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(fold_seed);
            let random: Vec<FineLabel> = test.labels.iter().map(|_| classes[rng.random_range(0..classes.len())]).collect();
            let train_counts = train.class_counts();
            let majority_class = (0..N_FINE)
                .max_by(|&a, &b| train_counts[a].cmp(&train_counts[b]).then(b.cmp(&a)))
                .map(|c| FineLabel::ALL[c])
                .expect("non-empty");
            let majority = vec![majority_class; test.len()];
            let mlp = |weighted: bool| -> Result<Vec<FineLabel>> {
                let cfg = FineConfig {
                    class_weighting: weighted,
                    seed: fold_seed,
                    ..*config
                };
                let model = FineClassifier::train(&train, &cfg)?;
                test.representations.iter().map(|r| model.predict(r)).collect()
            };
            let unweighted = mlp(false)?;
            let weighted = mlp(true)?;
            [random, majority, unweighted, weighted]
                .iter()
                .map(|pred| score(pred, &test.labels, &present))
                .collect()
        })
        .collect::<Result<_>>()?;

    let rows = FineMethod::ALL
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let folds: Vec<FoldScores> = per_fold.iter().map(|f| f[m].clone()).collect();
            FineRow {
                method,
                macro_f1: MeanStd::of(folds.iter().map(|s| s.macro_f1)),
                weighted_f1: MeanStd::of(folds.iter().map(|s| s.weighted_f1)),
                per_class_f1: (0..N_FINE).map(|c| MeanStd::of(folds.iter().map(|s| s.per_class_f1[c]))).collect(),
                accuracy: MeanStd::of(folds.iter().map(|s| s.accuracy)),
                folds,
            }
        })
        .collect();
    Ok(FineEvaluation {
        n_folds: folds,
        n_items: protos.len(),
        class_counts: counts,
        rows,
    })
}

/// Predicts a fine label for every item without a human label. Human labels
/// are never overwritten. Items are `(cascade_id, representation, human)`.
pub fn classify_remaining<'a>(
    classifier: &FineClassifier,
    items: impl IntoIterator<Item = (&'a str, &'a [f64], Option<FineLabel>)>,
) -> Result<BTreeMap<String, FineLabel>> {
    let mut out = BTreeMap::new();
    for (id, repr, human) in items {
        if human.is_some() {
            continue;
        }
        out.insert(id.to_string(), classifier.predict(repr)?);
    }
    Ok(out)
}
