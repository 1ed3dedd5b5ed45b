//! Tweet ingestion, cascade reconstruction and news-source weak labeling.
//!
//! A corpus is a flat stream of tweet records. Reference links
//! (retweet / reply / quote) form a directed graph over tweets; every
//! weakly-connected component of that graph is one cascade, rooted at the
//! post that references nothing else inside the component. A cascade is
//! weakly labeled from the credibility class of the news domain its source
//! post links to.

mod cascade;
mod domain;
mod ingest;
mod labels;
mod weak;

pub use cascade::{extract_cascades, Cascade, Engagement, Extraction};
pub use domain::{host_of, normalize_domain};
pub use ingest::{parse_tweet_reader, parse_tweet_stream, Ingested, IngestStats};
pub use labels::{read_labeled, write_labeled, LabeledRow};
pub use weak::{
    assign_weak_labels, read_source_list, write_cascades_jsonl, CascadeRecord, SourceClass,
    SourceList, WeakLabel, WeakLabeling,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Binary label value for reliable content.
pub const RELIABLE: u8 = 0;
/// Binary label value for misinformation.
pub const MISINFO: u8 = 1;

/// One tweet as it appears in the input stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub user_id: String,
    pub timestamp: i64,
    pub text: String,
    pub retweeted_id: Option<String>,
    pub replied_to_id: Option<String>,
    pub quoted_id: Option<String>,
    pub urls: Vec<String>,
}

/// How a tweet engages with the tweet it references.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngagementKind {
    Original,
    Retweet,
    Reply,
    Quote,
}

impl TweetRecord {
    /// Present reference ids in priority order retweet, reply, quote.
    pub fn references(&self) -> impl Iterator<Item = &str> {
        [&self.retweeted_id, &self.replied_to_id, &self.quoted_id]
            .into_iter()
            .filter_map(|r| r.as_deref())
    }

    pub fn kind(&self) -> EngagementKind {
        if self.retweeted_id.is_some() {
            EngagementKind::Retweet
        } else if self.replied_to_id.is_some() {
            EngagementKind::Reply
        } else if self.quoted_id.is_some() {
            EngagementKind::Quote
        } else {
            EngagementKind::Original
        }
    }
}

/// Records with an id index, shared read-only by every downstream stage.
#[derive(Debug, Clone, Default)]
pub struct TweetStore {
    records: Vec<TweetRecord>,
    by_id: HashMap<String, usize>,
}

impl TweetStore {
    /// Builds the index. Records must already have unique ids; later
    /// duplicates are ignored.
    pub fn new(records: Vec<TweetRecord>) -> Self {
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            by_id.entry(r.tweet_id.clone()).or_insert(i);
        }
        TweetStore { records, by_id }
    }

    pub fn get(&self, tweet_id: &str) -> Option<&TweetRecord> {
        self.by_id.get(tweet_id).map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[TweetRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
