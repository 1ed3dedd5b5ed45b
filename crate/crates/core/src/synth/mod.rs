//! Seeded synthetic corpora with planted communities, label noise and
//! fine-grained ground truth.

mod config;
mod generate;
mod io;
mod oracle;

pub use config::{PerClass, SynthConfig};
pub use generate::{generate, leaning, SynthCorpus, TruthRow};
pub use io::{
    read_ground_truth, write_ground_truth, GroundTruth, COMMUNITIES_FILE, CONFIG_FILE, GROUND_TRUTH_FILE,
    PROTOTYPES_FILE, SOURCES_FILE, TEST_FILE, TWEETS_FILE, VALIDATION_FILE,
};
pub use oracle::{oracle_report, OracleReport, PipelineVerdict};
