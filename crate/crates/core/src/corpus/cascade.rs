use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{host_of, TweetRecord};

/// One `(user, tweet, time)` step of a cascade.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(String, String, i64)", into = "(String, String, i64)")]
pub struct Engagement {
    pub user_id: String,
    pub tweet_id: String,
    pub timestamp: i64,
}

impl From<(String, String, i64)> for Engagement {
    fn from((user_id, tweet_id, timestamp): (String, String, i64)) -> Self {
        Engagement {
            user_id,
            tweet_id,
            timestamp,
        }
    }
}

impl From<Engagement> for (String, String, i64) {
    fn from(e: Engagement) -> Self {
        (e.user_id, e.tweet_id, e.timestamp)
    }
}

/// A source post and every direct or indirect engagement with it.
///
/// `engagements[0]` is the source post; the remainder is ordered by
/// `(timestamp, tweet_id)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cascade {
    pub cascade_id: String,
    pub source_tweet_id: String,
    pub source_domain: Option<String>,
    pub engagements: Vec<Engagement>,
}

impl Cascade {
    pub fn source(&self) -> &Engagement {
        &self.engagements[0]
    }

    pub fn len(&self) -> usize {
        self.engagements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.engagements.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    /// Sorted by `cascade_id`.
    pub cascades: Vec<Cascade>,
    /// Components dropped because their reference edges contain a cycle.
    pub cyclic_components: usize,
    pub cyclic_tweets: usize,
}

/// Reconstructs cascades as weakly-connected components of the reference
/// graph (tweet → retweeted / replied-to / quoted tweet, when the target is
/// in `records`).
///
/// The source post of a component is the tweet with no outgoing edge inside
/// it; when several qualify the earliest (then smallest id) wins.
/// Components whose reference edges contain a directed cycle are dropped.
pub fn extract_cascades(records: &[TweetRecord]) -> Extraction {
    let index: HashMap<&str, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.tweet_id.as_str(), i))
        .collect();

    let n = records.len();
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut undirected: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, r) in records.iter().enumerate() {
        for target in r.references() {
            if let Some(&j) = index.get(target) {
                if j != i && !out_edges[i].contains(&j) {
                    out_edges[i].push(j);
                    undirected[i].push(j);
                    undirected[j].push(i);
                }
            } else if target == r.tweet_id {
                // self reference: a trivial cycle
                out_edges[i].push(i);
            }
        }
    }

    let mut component = vec![usize::MAX; n];
    let mut extraction = Extraction::default();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        component[start] = start;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for &w in &undirected[v] {
                if component[w] == usize::MAX {
                    component[w] = start;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        if has_cycle(&members, &out_edges, &component) {
            extraction.cyclic_components += 1;
            extraction.cyclic_tweets += members.len();
            continue;
        }
        extraction.cascades.push(build(records, &members, &out_edges));
    }
    extraction
        .cascades
        .sort_by(|a, b| a.cascade_id.cmp(&b.cascade_id));
    extraction
}

fn has_cycle(members: &[usize], out_edges: &[Vec<usize>], component: &[usize]) -> bool {
    // Kahn's algorithm restricted to one component
    let mut indegree: HashMap<usize, usize> = members.iter().map(|&m| (m, 0)).collect();
    for &m in members {
        for &t in &out_edges[m] {
            if component[t] == component[m] {
                *indegree.get_mut(&t).expect("member") += 1;
            }
        }
    }
    let mut ready: Vec<usize> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&m, _)| m)
        .collect();
    let mut visited = 0;
    while let Some(v) = ready.pop() {
        visited += 1;
        for &t in &out_edges[v] {
            let d = indegree.get_mut(&t).expect("member");
            *d -= 1;
            if *d == 0 {
                ready.push(t);
            }
        }
    }
    visited != members.len()
}

fn build(records: &[TweetRecord], members: &[usize], out_edges: &[Vec<usize>]) -> Cascade {
    let root = members
        .iter()
        .copied()
        .filter(|&m| out_edges[m].is_empty())
        .min_by(|&a, &b| {
            (records[a].timestamp, &records[a].tweet_id)
                .cmp(&(records[b].timestamp, &records[b].tweet_id))
        })
        .expect("acyclic component has a sink");
    let mut rest: Vec<usize> = members.iter().copied().filter(|&m| m != root).collect();
    rest.sort_by(|&a, &b| {
        (records[a].timestamp, &records[a].tweet_id).cmp(&(records[b].timestamp, &records[b].tweet_id))
    });
    let source = &records[root];
    let engagements = std::iter::once(root)
        .chain(rest)
        .map(|i| Engagement {
            user_id: records[i].user_id.clone(),
            tweet_id: records[i].tweet_id.clone(),
            timestamp: records[i].timestamp,
        })
        .collect();
    Cascade {
        cascade_id: source.tweet_id.clone(),
        source_tweet_id: source.tweet_id.clone(),
        source_domain: source.urls.iter().find_map(|u| host_of(u)),
        engagements,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(id: &str, ts: i64) -> TweetRecord {
        TweetRecord {
            tweet_id: id.into(),
            user_id: format!("u{id}"),
            timestamp: ts,
            text: String::new(),
            retweeted_id: None,
            replied_to_id: None,
            quoted_id: None,
            urls: vec![],
        }
    }

    #[test]
    fn single_chain_is_one_time_ordered_cascade() {
        let t1 = tweet("t1", 10);
        let mut t2 = tweet("t2", 20);
        t2.retweeted_id = Some("t1".into());
        let mut t3 = tweet("t3", 30);
        t3.replied_to_id = Some("t2".into());
        let out = extract_cascades(&[t3, t1, t2]);
        assert_eq!(out.cascades.len(), 1);
        let ids: Vec<_> = out.cascades[0]
            .engagements
            .iter()
            .map(|e| e.tweet_id.as_str())
            .collect();
        assert_eq!(ids, ["t1", "t2", "t3"]);
        assert_eq!(out.cascades[0].cascade_id, "t1");
    }

    #[test]
    fn isolated_tweets_are_singletons() {
        let out = extract_cascades(&[tweet("a", 1), tweet("b", 2)]);
        assert_eq!(out.cascades.len(), 2);
        assert!(out.cascades.iter().all(|c| c.len() == 1));
    }

    #[test]
    fn dangling_reference_makes_its_own_root() {
        let mut t = tweet("r", 5);
        t.retweeted_id = Some("missing".into());
        let out = extract_cascades(&[t]);
        assert_eq!(out.cascades[0].source_tweet_id, "r");
    }

    #[test]
    fn two_roots_tie_break_on_time() {
        let a = tweet("a", 50);
        let b = tweet("b", 10);
        let mut x = tweet("x", 60);
        x.replied_to_id = Some("a".into());
        x.quoted_id = Some("b".into());
        let out = extract_cascades(&[a, b, x]);
        assert_eq!(out.cascades.len(), 1);
        assert_eq!(out.cascades[0].source_tweet_id, "b");
    }

    #[test]
    fn cycles_are_dropped_and_counted() {
        let mut a = tweet("a", 1);
        a.replied_to_id = Some("b".into());
        let mut b = tweet("b", 2);
        b.replied_to_id = Some("a".into());
        let out = extract_cascades(&[a, b, tweet("c", 3)]);
        assert_eq!(out.cascades.len(), 1);
        assert_eq!(out.cyclic_components, 1);
        assert_eq!(out.cyclic_tweets, 2);
    }

    #[test]
    fn source_domain_from_first_url() {
        let mut t = tweet("a", 1);
        t.urls = vec!["nonsense".into(), "https://www.Example.org/story".into()];
        let out = extract_cascades(&[t]);
        assert_eq!(out.cascades[0].source_domain.as_deref(), Some("example.org"));
    }

    #[test]
    fn engagement_serializes_as_triple() {
        let e = Engagement {
            user_id: "u".into(),
            tweet_id: "t".into(),
            timestamp: 3,
        };
        assert_eq!(serde_json::to_string(&e).unwrap(), r#"["u","t",3]"#);
    }
}
