//! Seven-class fine-grained labels and the prototype-based classifier.

mod eval;
mod label;
mod mlp;

pub use eval::{
    classify_remaining, evaluate_fine, stratified_folds, FineEvaluation, FineMethod, FineRow, FoldScores, MeanStd,
};
pub use label::{FineLabel, N_FINE};
pub use mlp::{class_weights, FineClassifier, FineConfig, PrototypeSet};
