use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Cascade, SourceClass, TweetStore, WeakLabeling};
use crate::detector::{CascadeFeatures, Featurizer};

/// Context shown to annotators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub text: String,
    pub source_domain: Option<String>,
    pub source_class: Option<SourceClass>,
    pub timestamp: i64,
    pub cascade_size: usize,
    pub unique_users: usize,
}

/// A weakly labeled cascade ready for refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub cascade_id: String,
    /// Author of the source post.
    pub author: String,
    pub weak_label: u8,
    pub features: CascadeFeatures,
    pub meta: InstanceMeta,
}

pub fn instance_meta(cascade: &Cascade, tweets: &TweetStore, source_domain: Option<String>, source_class: Option<SourceClass>) -> InstanceMeta {
    let source = cascade.source();
    InstanceMeta {
        text: tweets.get(&source.tweet_id).map(|t| t.text.clone()).unwrap_or_default(),
        source_domain,
        source_class,
        timestamp: source.timestamp,
        cascade_size: cascade.len(),
        unique_users: cascade.engagements.iter().map(|e| e.user_id.as_str()).collect::<HashSet<_>>().len(),
    }
}

/// Builds instances for every weakly labeled cascade not in `exclude`,
/// in cascade order.
pub fn build_instances(
    cascades: &[Cascade],
    tweets: &TweetStore,
    labeling: &WeakLabeling,
    featurizer: &Featurizer,
    exclude: &HashSet<String>,
) -> Vec<Instance> {
    cascades
        .par_iter()
        .filter(|c| !exclude.contains(&c.cascade_id))
        .filter_map(|c| {
            let weak = labeling.labels.get(&c.cascade_id)?;
            Some(Instance {
                cascade_id: c.cascade_id.clone(),
                author: c.source().user_id.clone(),
                weak_label: weak.value,
                features: featurizer.featurize(c, tweets),
                meta: instance_meta(c, tweets, labeling.domains.get(&c.cascade_id).cloned(), Some(weak.source_class)),
            })
        })
        .collect()
}

/// Features of the named cascades, in the order given. Unknown ids are
/// returned separately.
pub fn features_for(
    ids: &[String],
    cascades: &[Cascade],
    tweets: &TweetStore,
    featurizer: &Featurizer,
) -> (Vec<CascadeFeatures>, Vec<String>) {
    let by_id: BTreeMap<&str, &Cascade> = cascades.iter().map(|c| (c.cascade_id.as_str(), c)).collect();
    let mut missing = Vec::new();
    let mut found = Vec::new();
    for id in ids {
        match by_id.get(id.as_str()) {
            Some(c) => found.push(*c),
            None => missing.push(id.clone()),
        }
    }
    (found.par_iter().map(|c| featurizer.featurize(c, tweets)).collect(), missing)
}
