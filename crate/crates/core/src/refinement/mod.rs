//! Per-instance model/social states, the RETAIN / FLIP / QUERY policy, the
//! label store and the joint refinement loop.

mod dataset;
mod pipeline;
mod policy;
mod store;
mod strategies;

pub use dataset::{build_instances, features_for, instance_meta, Instance, InstanceMeta};
pub use pipeline::{
    compute_states, run_refinement, ActionCounts, AnnotationGate, Decision, FinalRecord, InstanceState, IterationReport,
    Mode, NoWait, PipelineConfig, RefinementConfig, RefinementInput, RefinementOutcome, RefinementReport, UntilDrained,
    GUIDELINES_VERSION,
};
pub use policy::{assign_action, Action, ActionKind, MState, Reason, SState};
pub use store::{
    Answer, AnswerError, HistoryEntry, LabelState, LabelStore, Progress, QueryQueue, QueueItem, SharedStore, Status,
};
pub use strategies::{evaluate_strategies, strategy_actions, Strategy, StrategyReport};
