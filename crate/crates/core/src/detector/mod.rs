//! Pluggable misinformation detector: hashed cascade features, a linear
//! reference model, prediction entropy, threshold selection and
//! entropy-filtered self-training.

mod features;
mod model;
mod self_train;
mod threshold;

pub use features::{tokenize, CascadeFeatures, FeatureConfig, Featurizer, SparseVec, N_STATS};
pub use model::{entropy, Design, DetectorConfig, DetectorModel, LogisticObjective, Prediction, MODEL_FORMAT};
pub use self_train::{
    fit_and_validate, model_states, quantile, self_train, LabeledSet, SelfTrainConfig, SelfTrainIteration,
    SelfTrainOutcome,
};
pub use threshold::select_threshold;
