use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::graph::RetweetGraph;

/// Minimum modularity gain for a node move.
const MIN_GAIN: f64 = 1e-9;

/// Community index per graph node. Communities are numbered by decreasing
/// size, ties broken by their smallest node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub n_communities: usize,
}

impl Partition {
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_communities];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

/// Working graph of one Louvain level. `self_loops[i]` is the weight of
/// edges folded inside node `i`, counted from both endpoints.
struct Level {
    adjacency: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl Level {
    fn degree(&self, i: usize) -> f64 {
        self.self_loops[i] + self.adjacency[i].iter().map(|&(_, w)| w).sum::<f64>()
    }
}

pub fn louvain_communities(graph: &RetweetGraph, seed: u64) -> Partition {
    let n = graph.n_nodes();
    if n == 0 {
        return Partition {
            assignment: vec![],
            n_communities: 0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = Level {
        adjacency: (0..n)
            .map(|i| graph.neighbors(i).iter().map(|&(j, w)| (j, w as f64)).collect())
            .collect(),
        self_loops: vec![0.0; n],
    };
    // original node -> node of the current level
    let mut mapping: Vec<usize> = (0..n).collect();
    loop {
        let (community, moved) = local_moving(&level, &mut rng);
        let community = compact(&community);
        for m in &mut mapping {
            *m = community[*m];
        }
        if !moved {
            break;
        }
        level = aggregate(&level, &community);
    }
    renumber(&mapping)
}

/// Repeated passes of greedy single-node moves. Returns the assignment and
/// whether any node moved.
fn local_moving(level: &Level, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = level.adjacency.len();
    let degree: Vec<f64> = (0..n).map(|i| level.degree(i)).collect();
    let two_m: f64 = degree.iter().sum();
    if two_m == 0.0 {
        return ((0..n).collect(), false);
    }
    let m = two_m / 2.0;
    let mut community: Vec<usize> = (0..n).collect();
    let mut total = degree.clone();
    let mut order: Vec<usize> = (0..n).collect();
    let mut any_move = false;
    let mut link: HashMap<usize, f64> = HashMap::new();
    loop {
        order.shuffle(rng);
        let mut moved = false;
        for &i in &order {
            let own = community[i];
            link.clear();
            for &(j, w) in &level.adjacency[i] {
                *link.entry(community[j]).or_default() += w;
            }
            total[own] -= degree[i];
            let gain = |c: usize, k_in: f64| k_in / m - total[c] * degree[i] / (2.0 * m * m);
            let own_gain = gain(own, link.get(&own).copied().unwrap_or(0.0));
            let mut best = (own, own_gain);
            // visit candidates in a fixed order so ties do not depend on hashing
            let mut candidates: Vec<(usize, f64)> = link.iter().map(|(&c, &w)| (c, w)).collect();
            candidates.sort_unstable_by_key(|&(c, _)| c);
            for (c, k_in) in candidates {
                let g = gain(c, k_in);
                if g > best.1 {
                    best = (c, g);
                }
            }
            if best.0 != own && best.1 - own_gain > MIN_GAIN {
                community[i] = best.0;
                moved = true;
            }
            total[community[i]] += degree[i];
        }
        if !moved {
            break;
        }
        any_move = true;
    }
    (community, any_move)
}

/// Relabels communities to `0..k` in order of first appearance.
fn compact(community: &[usize]) -> Vec<usize> {
    let mut ids = HashMap::new();
    community
        .iter()
        .map(|&c| {
            let next = ids.len();
            *ids.entry(c).or_insert(next)
        })
        .collect()
}

fn aggregate(level: &Level, community: &[usize]) -> Level {
    let k = community.iter().max().map_or(0, |&c| c + 1);
    let mut self_loops = vec![0.0; k];
    let mut links: Vec<HashMap<usize, f64>> = vec![HashMap::new(); k];
    for (i, list) in level.adjacency.iter().enumerate() {
        let ci = community[i];
        self_loops[ci] += level.self_loops[i];
        for &(j, w) in list {
            let cj = community[j];
            if ci == cj {
                self_loops[ci] += w;
            } else {
                *links[ci].entry(cj).or_default() += w;
            }
        }
    }
    let adjacency = links
        .into_iter()
        .map(|map| {
            let mut list: Vec<(usize, f64)> = map.into_iter().collect();
            list.sort_unstable_by_key(|&(j, _)| j);
            list
        })
        .collect();
    Level { adjacency, self_loops }
}

fn renumber(mapping: &[usize]) -> Partition {
    let k = mapping.iter().max().map_or(0, |&c| c + 1);
    let mut size = vec![0usize; k];
    let mut first = vec![usize::MAX; k];
    for (node, &c) in mapping.iter().enumerate() {
        size[c] += 1;
        first[c] = first[c].min(node);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(size[c]), first[c]));
    let mut new_id = vec![0; k];
    for (rank, &c) in order.iter().enumerate() {
        new_id[c] = rank;
    }
    Partition {
        assignment: mapping.iter().map(|&c| new_id[c]).collect(),
        n_communities: k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::social::modularity;

    fn clique(prefix: &str, n: usize) -> Vec<(String, String, u64)> {
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                out.push((format!("{prefix}{i}"), format!("{prefix}{j}"), 2));
            }
        }
        out
    }

    #[test]
    fn disjoint_cliques_are_recovered() {
        let mut edges = clique("a", 4);
        edges.extend(clique("b", 4));
        let g = RetweetGraph::from_edges(edges).unwrap();
        let p = louvain_communities(&g, 3);
        assert_eq!(p.n_communities, 2);
        assert_eq!(p.assignment, vec![0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn same_seed_same_partition() {
        let mut edges = clique("a", 6);
        edges.extend(clique("b", 5));
        edges.push(("a0".into(), "b0".into(), 2));
        let g = RetweetGraph::from_edges(edges).unwrap();
        assert_eq!(louvain_communities(&g, 9), louvain_communities(&g, 9));
        let p = louvain_communities(&g, 9);
        assert!(modularity(&g, &p.assignment) > 0.0);
    }

    #[test]
    fn empty_graph_gives_empty_partition() {
        let p = louvain_communities(&RetweetGraph::default(), 0);
        assert_eq!(p.n_communities, 0);
    }
}
