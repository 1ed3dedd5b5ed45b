use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rayon::prelude::*;

use crate::corpus::{EngagementKind, TweetStore};
use crate::{Error, Result};

/// Retweets needed between two users before they are linked.
pub const MIN_EDGE_WEIGHT: u64 = 2;

/// Undirected weighted user graph. Node indices follow sorted user id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RetweetGraph {
    users: Vec<String>,
    index: HashMap<String, usize>,
    /// Per node, `(neighbor, weight)` sorted by neighbor.
    adjacency: Vec<Vec<(usize, u64)>>,
}

impl RetweetGraph {
    /// Counts retweets between retweeter and original author in both
    /// directions and keeps pairs with at least [`MIN_EDGE_WEIGHT`].
    /// Replies and quotes do not link users.
    pub fn build(tweets: &TweetStore) -> Self {
        let counts = tweets
            .records()
            .par_iter()
            .filter(|r| r.kind() == EngagementKind::Retweet)
            .filter_map(|r| {
                let original = tweets.get(r.retweeted_id.as_deref()?)?;
                let (a, b) = (r.user_id.as_str(), original.user_id.as_str());
                match a.cmp(b) {
                    std::cmp::Ordering::Less => Some((a, b)),
                    std::cmp::Ordering::Greater => Some((b, a)),
                    std::cmp::Ordering::Equal => None,
                }
            })
            .fold(HashMap::new, |mut acc: HashMap<(&str, &str), u64>, pair| {
                *acc.entry(pair).or_default() += 1;
                acc
            })
            .reduce(HashMap::new, |mut a, b| {
                for (k, v) in b {
                    *a.entry(k).or_default() += v;
                }
                a
            });
        let edges: BTreeMap<(&str, &str), u64> = counts.into_iter().filter(|&(_, w)| w >= MIN_EDGE_WEIGHT).collect();
        Self::assemble(edges.into_iter().map(|((a, b), w)| (a.to_string(), b.to_string(), w)))
            .expect("counted edges are valid")
    }

    /// Graph from explicit edges. Repeated pairs are summed; no weight cut
    /// is applied.
    pub fn from_edges<S: Into<String>>(edges: impl IntoIterator<Item = (S, S, u64)>) -> Result<Self> {
        Self::assemble(edges.into_iter().map(|(a, b, w)| (a.into(), b.into(), w)))
    }

    fn assemble(edges: impl Iterator<Item = (String, String, u64)>) -> Result<Self> {
        let mut merged: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop on user {a}")));
            }
            if w == 0 {
                return Err(Error::InvalidInput(format!("edge {a}-{b} has zero weight")));
            }
            let key = if a < b { (a, b) } else { (b, a) };
            *merged.entry(key).or_default() += w;
        }
        let users: Vec<String> = merged
            .keys()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<String, usize> = users.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
        let mut adjacency = vec![Vec::new(); users.len()];
        for ((a, b), w) in merged {
            let (i, j) = (index[&a], index[&b]);
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(RetweetGraph { users, index, adjacency })
    }

    pub fn n_nodes(&self) -> usize {
        self.users.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn node(&self, user_id: &str) -> Option<usize> {
        self.index.get(user_id).copied()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, u64)] {
        &self.adjacency[node]
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v` by user id.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.adjacency.iter().enumerate().flat_map(move |(i, list)| {
            list.iter()
                .filter(move |&&(j, _)| i < j)
                .map(move |&(j, w)| (self.users[i].as_str(), self.users[j].as_str(), w))
        })
    }

    pub fn write_edges_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["u", "v", "w"])?;
        for (a, b, weight) in self.edges() {
            w.write_record([a, b, &weight.to_string()])?;
        }
        w.flush().map_err(|e| Error::write("edge list", e))
    }
}

/// Weighted modularity of a node assignment.
pub fn modularity(graph: &RetweetGraph, assignment: &[usize]) -> f64 {
    assert_eq!(assignment.len(), graph.n_nodes());
    let n_comm = assignment.iter().max().map_or(0, |&m| m + 1);
    let mut internal = vec![0.0; n_comm];
    let mut total = vec![0.0; n_comm];
    let mut two_m = 0.0;
    for (i, list) in graph.adjacency.iter().enumerate() {
        for &(j, w) in list {
            let w = w as f64;
            two_m += w;
            total[assignment[i]] += w;
            if assignment[i] == assignment[j] {
                internal[assignment[i]] += w;
            }
        }
    }
    if two_m == 0.0 {
        return 0.0;
    }
    internal
        .iter()
        .zip(&total)
        .map(|(inn, tot)| inn / two_m - (tot / two_m).powi(2))
        .sum()
}
