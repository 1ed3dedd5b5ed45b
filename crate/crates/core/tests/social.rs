use misinfo_refine::social::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Q = (1/2m) Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j) over the dense matrix.
fn dense_modularity(a: &[Vec<f64>], assignment: &[usize]) -> f64 {
    let n = a.len();
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assignment[i] == assignment[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

fn dense(graph: &RetweetGraph) -> Vec<Vec<f64>> {
    let n = graph.n_nodes();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for &(j, w) in graph.neighbors(i) {
            a[i][j] = w as f64;
        }
    }
    a
}

/// Maximum modularity over every set partition (restricted growth strings).
fn exhaustive_max(a: &[Vec<f64>]) -> (f64, Vec<usize>) {
    fn rec(a: &[Vec<f64>], rgs: &mut Vec<usize>, max: usize, best: &mut (f64, Vec<usize>)) {
        if rgs.len() == a.len() {
            let q = dense_modularity(a, rgs);
            if q > best.0 {
                *best = (q, rgs.clone());
            }
            return;
        }
        for c in 0..=max + 1 {
            rgs.push(c);
            rec(a, rgs, max.max(c), best);
            rgs.pop();
        }
    }
    let mut best = (f64::NEG_INFINITY, vec![]);
    let mut rgs = vec![0];
    rec(a, &mut rgs, 0, &mut best);
    best
}

fn clique(prefix: &str, n: usize, w: u64) -> Vec<(String, String, u64)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push((format!("{prefix}{i}"), format!("{prefix}{j}"), w));
        }
    }
    out
}

#[test]
fn joined_cliques_reach_the_exhaustive_optimum() {
    let mut edges = clique("a", 5, 2);
    edges.extend(clique("b", 5, 2));
    edges.push(("a0".into(), "b0".into(), 2));
    let g = RetweetGraph::from_edges(edges).unwrap();
    let (best_q, best) = exhaustive_max(&dense(&g));
    for seed in 0..10 {
        let p = louvain_communities(&g, seed);
        assert_eq!(p.n_communities, 2);
        let q = modularity(&g, &p.assignment);
        assert!((q - best_q).abs() < 1e-12, "seed {seed}: {q} vs {best_q}");
        assert_eq!(p.assignment, best);
    }
}

#[test]
fn ten_node_graphs_come_close_to_exhaustive_optimum() {
    // three dense groups of unequal size with sparse noisy cross links
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let group = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2];
        let mut edges = Vec::new();
        for i in 0..10 {
            for j in i + 1..10 {
                let p = if group[i] == group[j] { 0.9 } else { 0.08 };
                if rng.random_bool(p) {
                    edges.push((format!("n{i}"), format!("n{j}"), rng.random_range(2..6)));
                }
            }
        }
        let g = RetweetGraph::from_edges(edges).unwrap();
        let (best_q, _) = exhaustive_max(&dense(&g));
        let p = louvain_communities(&g, 5);
        let q = modularity(&g, &p.assignment);
        // greedy local moves can stop short of the global optimum
        assert!(q <= best_q + 1e-12 && q >= 0.9 * best_q, "{q} vs {best_q}");
    }
}

#[test]
fn modularity_agrees_with_dense_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let mut edges = Vec::new();
        for i in 0..15 {
            for j in i + 1..15 {
                if rng.random_bool(0.3) {
                    edges.push((format!("n{i:02}"), format!("n{j:02}"), rng.random_range(1..5)));
                }
            }
        }
        let g = RetweetGraph::from_edges(edges).unwrap();
        let assignment: Vec<usize> = (0..g.n_nodes()).map(|_| rng.random_range(0..4)).collect();
        let a = dense(&g);
        assert!((modularity(&g, &assignment) - dense_modularity(&a, &assignment)).abs() < 1e-12);
    }
}

#[test]
fn planted_partition_has_high_modularity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let block = |i: usize| i / 50;
    let mut edges = Vec::new();
    for i in 0..200 {
        for j in i + 1..200 {
            let p = if block(i) == block(j) { 0.3 } else { 0.01 };
            if rng.random_bool(p) {
                edges.push((format!("u{i:03}"), format!("u{j:03}"), 2));
            }
        }
    }
    let g = RetweetGraph::from_edges(edges).unwrap();
    let p = louvain_communities(&g, 1);
    let q = modularity(&g, &p.assignment);
    let singletons: Vec<usize> = (0..g.n_nodes()).collect();
    assert!(q >= 0.3, "{q}");
    assert!(q >= modularity(&g, &singletons));
    let members = p.members();
    assert_eq!(members.iter().map(Vec::len).sum::<usize>(), g.n_nodes());
}
