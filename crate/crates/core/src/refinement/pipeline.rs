use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Instance;
use super::policy::{assign_action, Action, ActionKind, MState, SState};
use super::store::{HistoryEntry, QueueItem, SharedStore, Status};
use crate::detector::{
    fit_and_validate, quantile, self_train, CascadeFeatures, DetectorConfig, FeatureConfig, DetectorModel, LabeledSet, SelfTrainConfig,
    SelfTrainIteration,
};
use crate::finegrained::{classify_remaining, FineClassifier, FineConfig, FineLabel, PrototypeSet};
use crate::metrics::MetricsReport;
use crate::social::{CommunityConfig, CommunityLabel, SocialContext};
use crate::{Error, Result};

/// Version stamped on guidelines and queue items.
pub const GUIDELINES_VERSION: &str = "2022.1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// QUERY items wait for human labels.
    Interactive,
    /// QUERY items are removed.
    #[default]
    Autonomous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefinementConfig {
    pub mode: Mode,
    /// When off every instance has no social signal.
    pub use_social: bool,
    pub max_iter: usize,
    /// Minimum validation Macro-F1 gain to keep iterating.
    pub eps: f64,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            mode: Mode::Autonomous,
            use_social: true,
            max_iter: 3,
            eps: 0.005,
        }
    }
}

/// Everything the joint refinement loop needs to know.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub detector: DetectorConfig,
    pub self_train: SelfTrainConfig,
    pub communities: CommunityConfig,
    pub refinement: RefinementConfig,
    pub finegrained: FineConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            features: FeatureConfig::default(),
            detector: DetectorConfig::default(),
            self_train: SelfTrainConfig::default(),
            communities: CommunityConfig::default(),
            refinement: RefinementConfig::default(),
            finegrained: FineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceState {
    pub m_state: MState,
    pub s_state: SState,
    pub entropy: f64,
    pub prob_misinfo: f64,
}

/// States of `instances` against their `labels`: the entropy cut is the
/// quantile over these instances; the social signal comes from the
/// source author's community.
pub fn compute_states(
    model: &DetectorModel,
    instances: &[&Instance],
    labels: &[u8],
    social: Option<&SocialContext>,
    entropy_quantile: f64,
) -> (Vec<InstanceState>, f64) {
    let feats: Vec<&CascadeFeatures> = instances.iter().map(|i| &i.features).collect();
    let preds = model.predict_batch(&feats);
    let entropies: Vec<f64> = preds.iter().map(|p| p.entropy).collect();
    let cut = quantile(&entropies, entropy_quantile);
    let states = instances
        .par_iter()
        .zip(preds.par_iter())
        .zip(labels.par_iter())
        .map(|((inst, p), &y)| {
            let m_state = if p.entropy > cut {
                MState::LowConfidence
            } else if model.predicted_label(p) == y {
                MState::Consistent
            } else {
                MState::Inconsistent
            };
            let s_state = social.map_or(SState::Unknown, |s| s.user_context(&inst.author, y).signal);
            InstanceState {
                m_state,
                s_state,
                entropy: p.entropy,
                prob_misinfo: p.prob_misinfo(),
            }
        })
        .collect();
    (states, cut)
}

/// Called after each iteration's actions are applied, before retraining.
pub trait AnnotationGate: Sync {
    fn wait(&self, store: &SharedStore, iteration: usize);
}

/// Continues immediately.
pub struct NoWait;

impl AnnotationGate for NoWait {
    fn wait(&self, _: &SharedStore, _: usize) {}
}

/// Waits until the queue is empty or an operator asks to proceed.
pub struct UntilDrained {
    pub poll: Duration,
}

impl AnnotationGate for UntilDrained {
    fn wait(&self, store: &SharedStore, iteration: usize) {
        log::info!("iteration {iteration}: waiting for annotations");
        store.wait_until(self.poll, |s| s.queue().pending().is_empty() || s.proceed_requested());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub cascade_id: String,
    pub m_state: MState,
    pub s_state: SState,
    pub entropy: f64,
    pub prob_misinfo: f64,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActionCounts {
    pub retain: usize,
    pub flip: usize,
    pub query: usize,
    pub remove: usize,
}

impl ActionCounts {
    pub fn count(actions: impl IntoIterator<Item = ActionKind>) -> Self {
        let mut c = ActionCounts::default();
        for a in actions {
            match a {
                ActionKind::Retain => c.retain += 1,
                ActionKind::Flip => c.flip += 1,
                ActionKind::Query => c.query += 1,
                ActionKind::Remove => c.remove += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub n_active: usize,
    pub entropy_cut: f64,
    pub action_counts: ActionCounts,
    pub n_answered: usize,
    pub n_training: usize,
    pub decision_threshold: f64,
    pub validation: MetricsReport,
    pub decisions: Vec<Decision>,
}

/// One row of the refined dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRecord {
    pub cascade_id: String,
    pub weak_label: u8,
    /// `None` unless the instance is active.
    pub refined_label: Option<u8>,
    pub status: Status,
    pub prob_misinfo: f64,
    pub entropy: f64,
    pub community_id: Option<usize>,
    pub community_label: Option<CommunityLabel>,
    pub fine_label_human: Option<FineLabel>,
    pub fine_label_pred: Option<FineLabel>,
    pub action_history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub config: PipelineConfig,
    pub n_instances: usize,
    pub self_training: Vec<SelfTrainIteration>,
    pub self_training_best_iteration: usize,
    pub self_training_warning: Option<String>,
    pub iterations: Vec<IterationReport>,
    /// Joint iteration whose model is final; 0 for the self-trained model.
    pub selected_iteration: usize,
    pub decision_threshold: f64,
    pub warning: Option<String>,
    pub records: Vec<FinalRecord>,
}

pub struct RefinementInput<'a> {
    pub instances: &'a [Instance],
    pub validation: LabeledSet<'a>,
    /// Community membership; dominance labels are recomputed each iteration.
    pub social: Option<SocialContext>,
    /// Extra human-labeled representations for the fine-grained classifier.
    pub prototypes: Option<PrototypeSet>,
}

#[derive(Debug)]
pub struct RefinementOutcome {
    pub report: RefinementReport,
    /// Model selected on validation Macro-F1.
    pub model: DetectorModel,
    /// Model trained on every weak label.
    pub weak_model: DetectorModel,
    pub social: Option<SocialContext>,
}

/// Self-training followed by joint refinement.
///
/// Each joint iteration relabels communities from the working labels of
/// active instances, computes model and social states, applies the action
/// policy, optionally waits for annotations, and retrains on the active
/// instances. Stops when validation Macro-F1 gains less than `eps`, after
/// `max_iter` iterations, or when training would lose a class.
pub fn run_refinement(
    input: RefinementInput<'_>,
    config: &PipelineConfig,
    store: &SharedStore,
    gate: &dyn AnnotationGate,
) -> Result<RefinementOutcome> {
    let instances = input.instances;
    if instances.is_empty() {
        return Err(Error::NoWeakLabels);
    }
    config.communities.validate()?;
    let index: HashMap<&str, usize> = instances.iter().enumerate().map(|(i, x)| (x.cascade_id.as_str(), i)).collect();
    if index.len() != instances.len() {
        return Err(Error::InvalidInput("duplicate cascade ids in dataset".into()));
    }
    let all_feats: Vec<&CascadeFeatures> = instances.iter().map(|i| &i.features).collect();
    let weak: Vec<u8> = instances.iter().map(|i| i.weak_label).collect();
    let interactive = config.refinement.mode == Mode::Interactive;

    let st = self_train(
        LabeledSet {
            features: &all_feats,
            labels: &weak,
        },
        input.validation,
        config.features.hash_dim,
        &config.detector,
        &config.self_train,
    )?;
    if let Some(w) = &st.warning {
        log::warn!("self-training: {w}");
    }
    let mut model = st.model.clone();
    let mut prev_f1 = st.iterations[st.best_iteration].validation_macro_f1;
    let mut best = (model.clone(), prev_f1, 0usize);
    let mut social = if config.refinement.use_social { input.social } else { None };
    let mut iterations = Vec::new();
    let mut warning = None;

    for iteration in 1..=config.refinement.max_iter {
        store.update(|s| s.set_iteration(iteration));
        let (active, labels) = active_set(store, &index, instances);
        if active.is_empty() {
            warning = Some(format!("iteration {iteration}: no active instances left"));
            break;
        }
        if let Some(ctx) = social.as_mut() {
            let pairs: Vec<(&str, u8)> = active.iter().zip(&labels).map(|(i, &y)| (i.author.as_str(), y)).collect();
            ctx.relabel(&pairs, &config.communities);
        }
        // Human answers are final: they train but are not re-decided.
        let (open, open_labels): (Vec<&Instance>, Vec<u8>) = {
            let snapshot = store.read();
            active
                .iter()
                .zip(&labels)
                .filter(|(i, _)| snapshot.get(&i.cascade_id).is_some_and(|s| s.fine_label_human.is_none()))
                .map(|(i, &y)| (*i, y))
                .unzip()
        };
        let (states, cut) = compute_states(&model, &open, &open_labels, social.as_ref(), config.self_train.entropy_quantile);
        let decisions: Vec<Decision> = open
            .iter()
            .zip(&states)
            .map(|(inst, st)| Decision {
                cascade_id: inst.cascade_id.clone(),
                m_state: st.m_state,
                s_state: st.s_state,
                entropy: st.entropy,
                prob_misinfo: st.prob_misinfo,
                action: assign_action(st.m_state, st.s_state),
            })
            .collect();

        // Training labels if no queued item gets answered.
        let projected: Vec<u8> = decisions
            .iter()
            .zip(&open_labels)
            .filter(|(d, _)| !d.action.value.is_query())
            .map(|(d, &y)| if d.action.value == ActionKind::Flip { 1 - y } else { y })
            .collect();
        if !both_classes(&projected) && !interactive {
            warning = Some(format!("iteration {iteration}: actions would leave a single class; kept previous labels"));
            break;
        }

        let actions: Vec<(String, Action)> = decisions.iter().map(|d| (d.cascade_id.clone(), d.action)).collect();
        let by_id: HashMap<&str, (&Decision, &Instance)> =
            decisions.iter().zip(&open).map(|(d, i)| (d.cascade_id.as_str(), (d, *i))).collect();
        let labels_of: HashMap<&str, u8> = open.iter().zip(&open_labels).map(|(i, &y)| (i.cascade_id.as_str(), y)).collect();
        store.update(|s| {
            s.apply_actions(iteration, &actions, interactive, |id| {
                let (d, inst) = by_id[id];
                queue_item(inst, d, labels_of[id], social.as_ref(), iteration)
            })
        })?;
        if interactive {
            gate.wait(store, iteration);
        }

        let (train, train_labels) = active_set(store, &index, instances);
        if !both_classes(&train_labels) {
            warning = Some(format!("iteration {iteration}: active set has a single class; kept previous model"));
            break;
        }
        let feats: Vec<&CascadeFeatures> = train.iter().map(|i| &i.features).collect();
        let (next, f1) = fit_and_validate(
            LabeledSet {
                features: &feats,
                labels: &train_labels,
            },
            input.validation,
            config.features.hash_dim,
            &config.detector,
        )?;
        let val_scores: Vec<f64> = input.validation.features.iter().map(|f| next.prob_misinfo(f)).collect();
        let validation = MetricsReport::compute(&val_scores, input.validation.labels, next.decision_threshold())?;
        iterations.push(IterationReport {
            iteration,
            n_active: active.len(),
            entropy_cut: cut,
            action_counts: ActionCounts::count(decisions.iter().map(|d| {
                if d.action.value == ActionKind::Query && !interactive {
                    ActionKind::Remove
                } else {
                    d.action.value
                }
            })),
            n_answered: store.read().queue().answered().len(),
            n_training: train.len(),
            decision_threshold: next.decision_threshold(),
            validation,
            decisions,
        });
        log::info!("iteration {iteration}: validation macro F1 {f1:.4}");
        if f1 > best.1 {
            best = (next.clone(), f1, iteration);
        }
        model = next;
        if f1 - prev_f1 < config.refinement.eps {
            break;
        }
        prev_f1 = f1;
    }
    if let Some(w) = &warning {
        log::warn!("{w}");
    }

    let (model, _, selected_iteration) = best;
    if let Some(ctx) = social.as_mut() {
        let (active, labels) = active_set(store, &index, instances);
        let pairs: Vec<(&str, u8)> = active.iter().zip(&labels).map(|(i, &y)| (i.author.as_str(), y)).collect();
        ctx.relabel(&pairs, &config.communities);
    }
    let fine_pred = predict_fine(instances, store, input.prototypes, &config.finegrained)?;
    let preds = model.predict_batch(&all_feats);
    let snapshot = store.read();
    let records = instances
        .iter()
        .zip(&preds)
        .map(|(inst, p)| {
            let state = snapshot.get(&inst.cascade_id).expect("store holds every instance");
            FinalRecord {
                cascade_id: inst.cascade_id.clone(),
                weak_label: state.weak_label,
                refined_label: (state.status == Status::Active).then_some(state.working_label),
                status: state.status,
                prob_misinfo: p.prob_misinfo(),
                entropy: p.entropy,
                community_id: social.as_ref().and_then(|s| s.membership.community_of(&inst.author)),
                community_label: social.as_ref().and_then(|s| s.community_label(&inst.author)),
                fine_label_human: state.fine_label_human,
                fine_label_pred: fine_pred.get(&inst.cascade_id).copied(),
                action_history: state.action_history.clone(),
            }
        })
        .collect();
    drop(snapshot);

    let report = RefinementReport {
        config: config.clone(),
        n_instances: instances.len(),
        self_training: st.iterations.clone(),
        self_training_best_iteration: st.best_iteration,
        self_training_warning: st.warning.clone(),
        iterations,
        selected_iteration,
        decision_threshold: model.decision_threshold(),
        warning,
        records,
    };
    Ok(RefinementOutcome {
        report,
        model,
        weak_model: st.initial_model,
        social,
    })
}

fn both_classes(labels: &[u8]) -> bool {
    labels.contains(&0) && labels.contains(&1)
}

/// Active instances in cascade-id order with their working labels.
fn active_set<'a>(store: &SharedStore, index: &HashMap<&str, usize>, instances: &'a [Instance]) -> (Vec<&'a Instance>, Vec<u8>) {
    let s = store.read();
    s.states()
        .filter(|st| st.status == Status::Active)
        .map(|st| (&instances[index[st.cascade_id.as_str()]], st.working_label))
        .unzip()
}

fn queue_item(inst: &Instance, d: &Decision, label: u8, social: Option<&SocialContext>, iteration: usize) -> QueueItem {
    QueueItem {
        cascade_id: inst.cascade_id.clone(),
        text: inst.meta.text.clone(),
        source_domain: inst.meta.source_domain.clone(),
        source_class: inst.meta.source_class.map(|c| c.as_str().to_string()),
        timestamp: inst.meta.timestamp,
        cascade_size: inst.meta.cascade_size,
        unique_users: inst.meta.unique_users,
        weak_label: label,
        prob_misinfo: d.prob_misinfo,
        entropy: d.entropy,
        community_label: social.and_then(|s| s.community_label(&inst.author)),
        m_state: d.m_state,
        s_state: d.s_state,
        iteration,
        guidelines_version: GUIDELINES_VERSION.to_string(),
    }
}

/// Fine-grained predictions for active instances without a human label,
/// trained on the given prototypes plus every human answer.
fn predict_fine(
    instances: &[Instance],
    store: &SharedStore,
    prototypes: Option<PrototypeSet>,
    config: &FineConfig,
) -> Result<BTreeMap<String, FineLabel>> {
    let snapshot = store.read();
    let mut protos = prototypes.unwrap_or_default();
    for inst in instances {
        if let Some(label) = snapshot.get(&inst.cascade_id).and_then(|s| s.fine_label_human) {
            protos.representations.push(inst.features.representation.clone());
            protos.labels.push(label);
        }
    }
    if protos.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Ok(BTreeMap::new());
    }
    let protos = PrototypeSet::new(protos.representations, protos.labels)?;
    let classifier = FineClassifier::train(&protos, config)?;
    let items = instances.iter().filter_map(|inst| {
        let state = snapshot.get(&inst.cascade_id)?;
        (state.status == Status::Active).then_some((
            inst.cascade_id.as_str(),
            inst.features.representation.as_slice(),
            state.fine_label_human,
        ))
    });
    classify_remaining(&classifier, items)
}
