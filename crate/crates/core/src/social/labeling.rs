use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::RetweetGraph;
use super::louvain::Partition;
use crate::corpus::MISINFO;
use crate::refinement::SState;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommunityLabel {
    Reliable,
    Misinformation,
    Mixed,
}

impl CommunityLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CommunityLabel::Reliable => "reliable",
            CommunityLabel::Misinformation => "misinformation",
            CommunityLabel::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommunityConfig {
    /// Share of one class needed to call a community dominant.
    pub tau_dom: f64,
    /// Weakly labeled cascades by members needed before labeling.
    pub min_labeled: usize,
    pub min_size: usize,
    /// Seed of the community detection pass.
    pub seed: u64,
}

impl Default for CommunityConfig {
    fn default() -> Self {
        CommunityConfig {
            tau_dom: 0.7,
            min_labeled: 10,
            min_size: 5,
            seed: 7,
        }
    }
}

impl CommunityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_dom > 0.5 && self.tau_dom <= 1.0) {
            return Err(Error::ConfigValue {
                key: "communities.tau_dom".into(),
                message: format!("must be in (0.5, 1], got {}", self.tau_dom),
            });
        }
        Ok(())
    }

    /// Label implied by the raw counts.
    pub fn label_for(&self, size: usize, n_reliable: usize, n_misinfo: usize) -> CommunityLabel {
        let n = n_reliable + n_misinfo;
        if size < self.min_size || n < self.min_labeled || n == 0 {
            return CommunityLabel::Mixed;
        }
        if n_misinfo as f64 / n as f64 >= self.tau_dom {
            CommunityLabel::Misinformation
        } else if n_reliable as f64 / n as f64 >= self.tau_dom {
            CommunityLabel::Reliable
        } else {
            CommunityLabel::Mixed
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    pub community_id: usize,
    /// Sorted user ids.
    pub members: Vec<String>,
    pub label: CommunityLabel,
    pub n_weak_reliable: usize,
    pub n_weak_misinfo: usize,
}

/// User to community assignment of the clustered users.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Membership {
    community_of: HashMap<String, usize>,
    members: Vec<Vec<String>>,
}

impl Membership {
    pub fn from_partition(graph: &RetweetGraph, partition: &Partition) -> Self {
        let mut members = vec![Vec::new(); partition.n_communities];
        let mut community_of = HashMap::with_capacity(graph.n_nodes());
        for (node, user) in graph.users().iter().enumerate() {
            let c = partition.assignment[node];
            members[c].push(user.clone());
            community_of.insert(user.clone(), c);
        }
        Membership { community_of, members }
    }

    pub fn community_of(&self, user_id: &str) -> Option<usize> {
        self.community_of.get(user_id).copied()
    }

    pub fn n_communities(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self, community_id: usize) -> &[String] {
        &self.members[community_id]
    }
}

/// Labels every community from the weak labels of cascades its members
/// authored. `labeled` holds `(author, binary label)` per labeled cascade.
pub fn label_communities(membership: &Membership, labeled: &[(&str, u8)], config: &CommunityConfig) -> Vec<Community> {
    let mut counts = vec![(0usize, 0usize); membership.n_communities()];
    for &(author, label) in labeled {
        if let Some(c) = membership.community_of(author) {
            if label == MISINFO {
                counts[c].1 += 1;
            } else {
                counts[c].0 += 1;
            }
        }
    }
    (0..membership.n_communities())
        .into_par_iter()
        .map(|c| {
            let members = membership.members(c).to_vec();
            let (n_weak_reliable, n_weak_misinfo) = counts[c];
            Community {
                community_id: c,
                label: config.label_for(members.len(), n_weak_reliable, n_weak_misinfo),
                members,
                n_weak_reliable,
                n_weak_misinfo,
            }
        })
        .collect()
}

/// Social signal of a post relative to its label, given the author's
/// community label (`None` when the author is unclustered).
pub fn user_signal(community: Option<CommunityLabel>, label: u8) -> SState {
    match (community, label == MISINFO) {
        (None | Some(CommunityLabel::Mixed), _) => SState::Unknown,
        (Some(CommunityLabel::Misinformation), true) | (Some(CommunityLabel::Reliable), false) => SState::Consistent,
        _ => SState::Inconsistent,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserContext {
    pub user_id: String,
    pub community_id: Option<usize>,
    pub signal: SState,
}

/// Communities with their current dominance labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SocialContext {
    pub membership: Membership,
    pub communities: Vec<Community>,
}

impl SocialContext {
    pub fn new(membership: Membership, labeled: &[(&str, u8)], config: &CommunityConfig) -> Self {
        let communities = label_communities(&membership, labeled, config);
        SocialContext { membership, communities }
    }

    /// Recomputes dominance labels, keeping the membership.
    pub fn relabel(&mut self, labeled: &[(&str, u8)], config: &CommunityConfig) {
        self.communities = label_communities(&self.membership, labeled, config);
    }

    pub fn community_label(&self, user_id: &str) -> Option<CommunityLabel> {
        self.membership.community_of(user_id).map(|c| self.communities[c].label)
    }

    pub fn user_context(&self, user_id: &str, label: u8) -> UserContext {
        UserContext {
            user_id: user_id.to_string(),
            community_id: self.membership.community_of(user_id),
            signal: user_signal(self.community_label(user_id), label),
        }
    }

    /// `user_id,community_id,community_label`, one row per clustered user.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["user_id", "community_id", "community_label"])?;
        for c in &self.communities {
            for user in &c.members {
                w.write_record([user.as_str(), &c.community_id.to_string(), c.label.as_str()])?;
            }
        }
        w.flush().map_err(|e| Error::write("communities", e))
    }
}
