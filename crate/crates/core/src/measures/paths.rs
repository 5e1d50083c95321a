use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::DiffusionGraph;

/// Shortest-path lengths with edge length `1 / w_ij` among the `top_n`
/// nodes of highest out-strength. These are interaction distances, not
/// geographic ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    /// Node indices, by out-strength descending (ties by index).
    pub order: Vec<usize>,
    /// `dist[a][b]` is the distance from `order[a]` to `order[b]`;
    /// unreachable pairs are `f64::INFINITY`.
    pub dist: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(g: &DiffusionGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry { dist: 0.0, node: source });
    while let Some(Entry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, w) in g.out_edges(node) {
            let cand = d + 1.0 / w as f64;
            if cand < dist[next] {
                dist[next] = cand;
                heap.push(Entry { dist: cand, node: next });
            }
        }
    }
    dist
}

/// Paths may pass through any node of the full graph. `top_n` larger than
/// the node count is clamped.
pub fn inverse_weight_distances(g: &DiffusionGraph, top_n: usize) -> DistanceMatrix {
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(g.out_strength(i)), i));
    order.truncate(top_n.min(g.node_count()));
    let dist = order
        .iter()
        .map(|&src| {
            let all = dijkstra(g, src);
            order.iter().map(|&dst| all[dst]).collect()
        })
        .collect();
    DistanceMatrix { order, dist }
}
