//! Null models for rich-club normalization.

use std::collections::HashSet;

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::DiffusionGraph;

pub const DEFAULT_SWAPS_PER_EDGE: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewireReport {
    pub attempted: u64,
    pub accepted: u64,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Degree-preserving randomization by directed double-edge swaps.
///
/// Each attempt picks two edges `a->b`, `c->d` and replaces them with
/// `a->d`, `c->b`, rejecting swaps that would create a loop or repeat an
/// existing edge. Every node keeps its in- and out-degree. `swaps_per_edge *
/// |E|` swaps are attempted; afterwards the original weight multiset is
/// dealt onto the new edges in random order.
pub fn null_rewire(g: &DiffusionGraph, seed: u64, swaps_per_edge: u32) -> (DiffusionGraph, RewireReport) {
    let mut edges: Vec<(usize, usize)> = g.edges().map(|(i, j, _)| (i, j)).collect();
    let mut weights: Vec<u64> = g.edges().map(|(_, _, w)| w).collect();
    if edges.len() < 2 {
        warn!("graph has {} edge(s); nothing to rewire", edges.len());
        return (g.clone(), RewireReport { attempted: 0, accepted: 0 });
    }
    let mut rng = rng(seed);
    let mut present: HashSet<(usize, usize)> = edges.iter().copied().collect();
    let attempts = u64::from(swaps_per_edge) * edges.len() as u64;
    let mut accepted = 0;
    for _ in 0..attempts {
        let e1 = rng.random_range(0..edges.len());
        let e2 = rng.random_range(0..edges.len());
        if e1 == e2 {
            continue;
        }
        let (a, b) = edges[e1];
        let (c, d) = edges[e2];
        if a == d || c == b || present.contains(&(a, d)) || present.contains(&(c, b)) {
            continue;
        }
        present.remove(&(a, b));
        present.remove(&(c, d));
        present.insert((a, d));
        present.insert((c, b));
        edges[e1] = (a, d);
        edges[e2] = (c, b);
        accepted += 1;
    }
    edges.sort_unstable();
    weights.shuffle(&mut rng);
    let rewired = edges.into_iter().zip(weights).map(|((i, j), w)| (i, j, w)).collect();
    let out = g.with_edges(rewired).expect("swaps keep the graph simple");
    (out, RewireReport { attempted: attempts, accepted })
}

/// Topology-preserving randomization: each node's out-edge weights are
/// permuted uniformly at random over its existing out-edges.
pub fn null_weight_reshuffle(g: &DiffusionGraph, seed: u64) -> DiffusionGraph {
    let mut rng = rng(seed);
    let mut edges = Vec::with_capacity(g.edge_count());
    for i in 0..g.node_count() {
        let out = g.out_edges(i);
        let mut w: Vec<u64> = out.iter().map(|&(_, w)| w).collect();
        w.shuffle(&mut rng);
        edges.extend(out.iter().zip(w).map(|(&(j, _), w)| (i, j, w)));
    }
    g.with_edges(edges).expect("topology is unchanged")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::testgraphs::{graph, random};

    fn degrees(g: &DiffusionGraph) -> Vec<(usize, usize)> {
        (0..g.node_count()).map(|i| (g.in_edges(i).len(), g.out_edges(i).len())).collect()
    }

    fn sorted_weights(g: &DiffusionGraph) -> Vec<u64> {
        let mut w: Vec<u64> = g.edges().map(|e| e.2).collect();
        w.sort_unstable();
        w
    }

    #[test]
    fn rewire_preserves_degrees_and_weights() {
        for seed in 0..20 {
            let g = random(seed, 20, 0.2, 30);
            let (r, report) = null_rewire(&g, seed + 100, 10);
            assert_eq!(degrees(&r), degrees(&g));
            assert_eq!(sorted_weights(&r), sorted_weights(&g));
            assert!(r.edges().all(|(i, j, _)| i != j));
            assert!(report.accepted > 0);
        }
    }

    #[test]
    fn rewire_is_seeded() {
        let g = random(7, 20, 0.2, 30);
        assert_eq!(null_rewire(&g, 1, 10).0, null_rewire(&g, 1, 10).0);
        let e = |x: &DiffusionGraph| x.edges().map(|(i, j, _)| (i, j)).collect::<Vec<_>>();
        assert_ne!(e(&null_rewire(&g, 1, 10).0), e(&null_rewire(&g, 2, 10).0));
    }

    #[test]
    fn tiny_graph_is_copied() {
        let g = graph(2, &[(0, 1, 3)]);
        let (r, report) = null_rewire(&g, 0, 10);
        assert_eq!(r, g);
        assert_eq!(report.attempted, 0);
    }

    #[test]
    fn reshuffle_preserves_topology_and_out_strength() {
        let g = random(3, 15, 0.4, 50);
        let r = null_weight_reshuffle(&g, 9);
        let topo = |x: &DiffusionGraph| x.edges().map(|(i, j, _)| (i, j)).collect::<Vec<_>>();
        assert_eq!(topo(&r), topo(&g));
        for i in 0..g.node_count() {
            assert_eq!(r.out_strength(i), g.out_strength(i));
        }
        assert_eq!(null_weight_reshuffle(&g, 9), r);
        assert_ne!(null_weight_reshuffle(&g, 10), r);
    }

    #[test]
    fn single_out_edge_is_untouched() {
        let g = graph(3, &[(0, 1, 5), (1, 2, 1), (1, 0, 9)]);
        for seed in 0..10 {
            assert_eq!(null_weight_reshuffle(&g, seed).weight(0, 1), 5);
        }
    }
}
