//! Construction of misinformation-labeled social-media datasets from
//! news-source credibility weak labels by model-guided label refinement.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod detector;
pub mod error;
pub mod finegrained;
pub mod metrics;
pub mod refinement;
pub mod service;
pub mod social;
pub mod synth;
pub mod workflow;

pub use error::{Error, Result};
