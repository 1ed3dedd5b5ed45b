//! End-to-end glue shared by the command line and the test suites.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{
    assign_weak_labels, extract_cascades, Cascade, Extraction, LabeledRow, SourceList, TweetRecord, TweetStore,
    WeakLabeling,
};
use crate::detector::{CascadeFeatures, DetectorModel, FeatureConfig, Featurizer, LabeledSet};
use crate::finegrained::{evaluate_fine, FineConfig, FineEvaluation, PrototypeSet};
use crate::metrics::{spearman, MetricsReport};
use crate::refinement::{
    build_instances, evaluate_strategies, features_for, run_refinement, AnnotationGate, Instance, IterationReport,
    LabelStore, PipelineConfig, RefinementInput, RefinementOutcome, SharedStore, StrategyReport,
};
use crate::social::{louvain_communities, Membership, RetweetGraph, SocialContext};
use crate::{Error, Result};

pub const FINE_FOLDS: usize = 5;

/// A corpus with cascades, weak labels and a featurizer.
pub struct PreparedCorpus {
    pub tweets: TweetStore,
    pub extraction: Extraction,
    pub labeling: WeakLabeling,
    pub featurizer: Featurizer,
}

impl PreparedCorpus {
    pub fn new(records: Vec<TweetRecord>, sources: &SourceList, features: FeatureConfig) -> Self {
        let extraction = extract_cascades(&records);
        let tweets = TweetStore::new(records);
        let labeling = assign_weak_labels(&extraction.cascades, &tweets, sources);
        PreparedCorpus {
            tweets,
            extraction,
            labeling,
            featurizer: Featurizer::new(features),
        }
    }

    pub fn cascades(&self) -> &[Cascade] {
        &self.extraction.cascades
    }

    pub fn retweet_graph(&self) -> RetweetGraph {
        RetweetGraph::build(&self.tweets)
    }

    /// Detected communities without labels; labels follow the working
    /// labels during refinement.
    pub fn membership(&self, seed: u64) -> Membership {
        let graph = self.retweet_graph();
        let partition = louvain_communities(&graph, seed);
        Membership::from_partition(&graph, &partition)
    }

    /// Weakly labeled instances outside `exclude`.
    pub fn instances(&self, exclude: &HashSet<String>) -> Vec<Instance> {
        build_instances(self.cascades(), &self.tweets, &self.labeling, &self.featurizer, exclude)
    }

    /// Features and binary labels of `rows`, which must all name cascades.
    pub fn labeled_features(&self, rows: &[LabeledRow], what: &str) -> Result<(Vec<CascadeFeatures>, Vec<u8>)> {
        let ids: Vec<String> = rows.iter().map(|r| r.cascade_id.clone()).collect();
        let (features, missing) = features_for(&ids, self.cascades(), &self.tweets, &self.featurizer);
        if let Some(id) = missing.first() {
            return Err(Error::InvalidInput(format!(
                "{what}: cascade {id} is not in the corpus ({} unknown ids)",
                missing.len()
            )));
        }
        Ok((features, rows.iter().map(|r| r.label).collect()))
    }

    /// Representations and fine labels of `rows`; rows without a fine
    /// label are an error.
    pub fn prototypes(&self, rows: &[LabeledRow]) -> Result<PrototypeSet> {
        let labels = rows
            .iter()
            .map(|r| {
                r.fine_label
                    .ok_or_else(|| Error::schema("prototypes", "fine_label", format!("missing for {}", r.cascade_id)))
            })
            .collect::<Result<Vec<_>>>()?;
        let (features, _) = self.labeled_features(rows, "prototypes")?;
        PrototypeSet::new(features.into_iter().map(|f| f.representation).collect(), labels)
    }
}

/// Held-out labeled sets: never used as training instances.
#[derive(Debug, Clone, Default)]
pub struct Holdout {
    pub validation: Vec<LabeledRow>,
    pub test: Vec<LabeledRow>,
    pub prototypes: Vec<LabeledRow>,
}

impl Holdout {
    pub fn ids(&self) -> HashSet<String> {
        self.validation
            .iter()
            .chain(&self.test)
            .chain(&self.prototypes)
            .map(|r| r.cascade_id.clone())
            .collect()
    }
}

/// A fresh label store over `instances`.
pub fn label_store(instances: &[Instance]) -> SharedStore {
    SharedStore::new(LabelStore::new(instances.iter().map(|i| (i.cascade_id.clone(), i.weak_label))))
}

/// Runs the full refinement of `instances`, which should exclude every
/// held-out row, validating on the holdout's validation rows.
pub fn refine_corpus(
    corpus: &PreparedCorpus,
    instances: &[Instance],
    holdout: &Holdout,
    config: &PipelineConfig,
    store: &SharedStore,
    gate: &dyn AnnotationGate,
) -> Result<RefinementOutcome> {
    if instances.is_empty() {
        return Err(Error::NoWeakLabels);
    }
    let (val_feats, val_labels) = corpus.labeled_features(&holdout.validation, "validation")?;
    let val_refs: Vec<&CascadeFeatures> = val_feats.iter().collect();
    let social = config.refinement.use_social.then(|| {
        let membership = corpus.membership(config.communities.seed);
        let pairs: Vec<(&str, u8)> = instances.iter().map(|i| (i.author.as_str(), i.weak_label)).collect();
        SocialContext::new(membership, &pairs, &config.communities)
    });
    let prototypes = if holdout.prototypes.is_empty() {
        None
    } else {
        Some(corpus.prototypes(&holdout.prototypes)?)
    };
    run_refinement(
        RefinementInput {
            instances,
            validation: LabeledSet {
                features: &val_refs,
                labels: &val_labels,
            },
            social,
            prototypes,
        },
        config,
        store,
        gate,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorRow {
    pub training: String,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_test: usize,
    /// Detector trained on weak labels only, then after refinement.
    pub detector: Vec<DetectorRow>,
    /// Noise detection of each strategy on training instances with truth.
    pub noise_detection: Option<Vec<StrategyReport>>,
    /// Rank correlation of the refined model's misinformation probability
    /// with the truth ordinal of test fine labels.
    pub fine_rank_correlation: Option<f64>,
    pub finegrained: Option<FineEvaluation>,
}

impl EvaluationReport {
    pub fn detector_row(&self, training: &str) -> Option<&MetricsReport> {
        self.detector.iter().find(|r| r.training == training).map(|r| &r.metrics)
    }

    pub fn strategy(&self, strategy: crate::refinement::Strategy) -> Option<&StrategyReport> {
        self.noise_detection.as_ref()?.iter().find(|r| r.strategy == strategy)
    }
}

/// What `evaluate` needs from a finished refinement.
pub struct EvaluationInput<'a> {
    pub weak_model: &'a DetectorModel,
    pub model: &'a DetectorModel,
    /// Joint iterations; the first one's decisions are scored per strategy.
    pub iterations: &'a [IterationReport],
    /// Weak label per training instance.
    pub weak: &'a HashMap<String, u8>,
    /// True binary labels, any subset of cascades.
    pub truth: &'a HashMap<String, u8>,
}

pub fn evaluate(
    corpus: &PreparedCorpus,
    input: EvaluationInput<'_>,
    test: &[LabeledRow],
    prototypes: &[LabeledRow],
    fine: &FineConfig,
) -> Result<EvaluationReport> {
    let (test_feats, test_labels) = corpus.labeled_features(test, "test")?;
    let mut detector = Vec::new();
    let mut refined_scores = Vec::new();
    for (training, model) in [("weak", input.weak_model), ("refined", input.model)] {
        let scores: Vec<f64> = test_feats.iter().map(|f| model.prob_misinfo(f)).collect();
        detector.push(DetectorRow {
            training: training.to_string(),
            metrics: MetricsReport::compute(&scores, &test_labels, model.decision_threshold())?,
        });
        refined_scores = scores;
    }

    let noise_detection = match input.iterations.first() {
        Some(first) if first.decisions.iter().any(|d| input.truth.contains_key(&d.cascade_id)) => {
            Some(evaluate_strategies(&first.decisions, input.weak, input.truth)?)
        }
        _ => None,
    };

    let (scores, ordinals): (Vec<f64>, Vec<f64>) = test
        .iter()
        .zip(&refined_scores)
        .filter_map(|(row, &s)| Some((s, f64::from(row.fine_label?.truth_ordinal()?))))
        .unzip();
    let fine_rank_correlation = if scores.len() >= 3 { Some(spearman(&scores, &ordinals)?) } else { None };

    let finegrained = if prototypes.is_empty() {
        None
    } else {
        Some(evaluate_fine(&corpus.prototypes(prototypes)?, FINE_FOLDS, fine)?)
    };

    Ok(EvaluationReport {
        n_test: test.len(),
        detector,
        noise_detection,
        fine_rank_correlation,
        finegrained,
    })
}
