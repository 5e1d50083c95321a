//! Node- and network-level statistics of a diffusion graph.

mod clustering;
mod hits;
mod paths;

pub use clustering::{
    clustering, clustering_by_strength, Clustering, ClusteringMode, StrengthBin, StrengthBins,
    StrengthKind,
};
pub use hits::{hits, HitsConfig, HitsScores};
pub use paths::{inverse_weight_distances, DistanceMatrix};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Country, DiffusionGraph, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeProfile {
    pub country: Country,
    pub in_degree: usize,
    pub out_degree: usize,
    pub in_strength: u64,
    pub out_strength: u64,
    /// Strength of bilateral arcs: `sum_j a_ij a_ji (w_ij + w_ji) / 2`.
    pub bilateral_strength: f64,
}

impl NodeProfile {
    pub fn total_degree(&self) -> usize {
        self.in_degree + self.out_degree
    }

    pub fn total_strength(&self) -> u64 {
        self.in_strength + self.out_strength
    }
}

pub fn node_profiles(g: &DiffusionGraph) -> Vec<NodeProfile> {
    (0..g.node_count())
        .map(|i| {
            let bilateral: u64 = g
                .out_edges(i)
                .iter()
                .filter_map(|&(j, w)| {
                    let back = g.weight(j, i);
                    (back > 0).then_some(w + back)
                })
                .sum();
            NodeProfile {
                country: g.node(i).clone(),
                in_degree: g.in_edges(i).len(),
                out_degree: g.out_edges(i).len(),
                in_strength: g.in_strength(i),
                out_strength: g.out_strength(i),
                bilateral_strength: bilateral as f64 / 2.0,
            }
        })
        .collect()
}

/// Which node set the density denominator counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityNodes {
    /// Every node of the graph, isolated ones included.
    #[default]
    All,
    /// Only nodes with at least one incident edge.
    EdgeBearing,
}

/// `|E| / (|V| (|V| - 1))`.
pub fn density(g: &DiffusionGraph, nodes: DensityNodes) -> Result<f64> {
    let n = match nodes {
        DensityNodes::All => g.node_count(),
        DensityNodes::EdgeBearing => g.edge_bearing_node_count(),
    };
    if n < 2 {
        return Err(Error::Undefined("density needs at least 2 nodes"));
    }
    Ok(g.edge_count() as f64 / (n as f64 * (n - 1) as f64))
}

/// Fraction of directed edges whose reverse edge also exists.
pub fn reciprocity(g: &DiffusionGraph) -> Result<f64> {
    if g.edge_count() == 0 {
        return Err(Error::Undefined("reciprocity of a graph without edges"));
    }
    let mutual = g.edges().filter(|&(i, j, _)| g.has_edge(j, i)).count();
    Ok(mutual as f64 / g.edge_count() as f64)
}

/// Row-stochastic matrix `p_ij = w_ij / out_strength(i)` over out-neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    /// Row of `i`, `None` when `i` has no out-edges.
    pub fn row(&self, i: usize) -> Option<&[(usize, f64)]> {
        let r = &self.rows[i];
        (!r.is_empty()).then_some(r.as_slice())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.rows[i];
        r.binary_search_by_key(&j, |&(t, _)| t).map(|pos| r[pos].1).unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn transition_probabilities(g: &DiffusionGraph) -> TransitionMatrix {
    let rows = (0..g.node_count())
        .map(|i| {
            let s = g.out_strength(i) as f64;
            g.out_edges(i).iter().map(|&(j, w)| (j, w as f64 / s)).collect()
        })
        .collect();
    TransitionMatrix { rows }
}

/// Disparity `gamma_i(k) = k sum_j p_ij^2` with `k` the out-degree; `None`
/// for nodes without out-edges. Ranges from 1 (all out-weights equal) to `k`
/// (one edge carries everything).
pub fn disparity(g: &DiffusionGraph) -> Vec<Option<f64>> {
    let p = transition_probabilities(g);
    (0..g.node_count())
        .map(|i| {
            p.row(i).map(|row| row.len() as f64 * row.iter().map(|&(_, x)| x * x).sum::<f64>())
        })
        .collect()
}

/// Transition probabilities in both directions of a reciprocated pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutualPair {
    pub i: usize,
    pub j: usize,
    pub p_ij: f64,
    pub p_ji: f64,
}

/// One entry per unordered mutual pair, `i < j`.
pub fn mutual_edge_pairs(g: &DiffusionGraph) -> Vec<MutualPair> {
    let p = transition_probabilities(g);
    g.edges()
        .filter(|&(i, j, _)| i < j && g.has_edge(j, i))
        .map(|(i, j, _)| MutualPair { i, j, p_ij: p.get(i, j), p_ji: p.get(j, i) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided, Student t with `n - 2` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 3 {
        return Err(Error::Undefined("correlation needs at least 3 observations"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation with a constant variable"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        2.0 * dist.sf(t.abs())
    };
    Ok(Correlation { r, p_value, n })
}

/// Pearson correlation between in- and out-degree.
pub fn degree_correlation(profiles: &[NodeProfile]) -> Result<Correlation> {
    let ins: Vec<f64> = profiles.iter().map(|p| p.in_degree as f64).collect();
    let outs: Vec<f64> = profiles.iter().map(|p| p.out_degree as f64).collect();
    pearson(&ins, &outs)
}

#[cfg(test)]
pub(crate) mod testgraphs {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::{Country, DiffusionGraph};

    pub fn name(i: usize) -> Country {
        Country::parse(&format!("N{i:03}")).unwrap()
    }

    pub fn graph(n: usize, edges: &[(usize, usize, u64)]) -> DiffusionGraph {
        DiffusionGraph::new(
            (0..n).map(name),
            edges.iter().map(|&(i, j, w)| (name(i), name(j), w)),
        )
        .unwrap()
    }

    /// Directed G(n, p) with weights uniform in `1..=max_w`.
    pub fn random(seed: u64, n: usize, p: f64, max_w: u64) -> DiffusionGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random_bool(p) {
                    edges.push((i, j, rng.random_range(1..=max_w)));
                }
            }
        }
        graph(n, &edges)
    }
}

#[cfg(test)]
mod tests {
    use super::testgraphs::{graph, random};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_edge_profile() {
        let g = graph(2, &[(0, 1, 5)]);
        let p = node_profiles(&g);
        assert_eq!((p[0].out_degree, p[0].out_strength, p[0].in_degree, p[0].in_strength), (1, 5, 0, 0));
        assert_eq!((p[1].in_degree, p[1].in_strength, p[1].out_degree, p[1].out_strength), (1, 5, 0, 0));
    }

    #[test]
    fn bilateral_strength_averages_the_pair() {
        let p = node_profiles(&graph(2, &[(0, 1, 3), (1, 0, 1)]));
        assert_eq!(p[0].bilateral_strength, 2.0);
        assert_eq!(p[1].bilateral_strength, 2.0);
    }

    #[test]
    fn density_cases() {
        let k4: Vec<_> = (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j, 1))).collect();
        assert_eq!(density(&graph(4, &k4), DensityNodes::All).unwrap(), 1.0);
        assert_eq!(density(&graph(2, &[(0, 1, 1)]), DensityNodes::All).unwrap(), 0.5);
        assert!(density(&graph(1, &[]), DensityNodes::All).is_err());
        let with_isolated = graph(3, &[(0, 1, 1)]);
        assert_eq!(density(&with_isolated, DensityNodes::All).unwrap(), 1.0 / 6.0);
        assert_eq!(density(&with_isolated, DensityNodes::EdgeBearing).unwrap(), 0.5);
    }

    #[test]
    fn reciprocity_cases() {
        assert_eq!(reciprocity(&graph(2, &[(0, 1, 1), (1, 0, 4)])).unwrap(), 1.0);
        assert_eq!(reciprocity(&graph(2, &[(0, 1, 1)])).unwrap(), 0.0);
        assert!(reciprocity(&graph(2, &[])).is_err());
    }

    #[test]
    fn transition_rows() {
        let t = transition_probabilities(&graph(4, &[(0, 1, 1), (0, 2, 1), (0, 3, 2), (1, 0, 7)]));
        let row: Vec<f64> = t.row(0).unwrap().iter().map(|&(_, p)| p).collect();
        assert_eq!(row, vec![0.25, 0.25, 0.5]);
        assert_eq!(t.row(1).unwrap(), &[(0, 1.0)]);
        assert!(t.row(2).is_none());
    }

    #[test]
    fn disparity_cases() {
        let g = graph(4, &[(0, 1, 3), (0, 2, 3), (0, 3, 3), (1, 0, 3), (1, 2, 1)]);
        let d = disparity(&g);
        assert!((d[0].unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(d[1].unwrap(), 1.25);
        assert!(d[2].is_none());
        // approaching a single dominant edge: gamma -> k
        let heavy = graph(4, &[(0, 1, 1_000_000_000), (0, 2, 1), (0, 3, 1)]);
        let gamma = disparity(&heavy)[0].unwrap();
        assert!(gamma < 3.0 && gamma > 3.0 - 1e-7);
    }

    #[test]
    fn mutual_pairs_on_fixture() {
        // A<->B (3,1), A->C 4, C->A 4, C->D 2, D->B 1
        let g = graph(4, &[(0, 1, 3), (1, 0, 1), (0, 2, 4), (2, 0, 4), (2, 3, 2), (3, 1, 1)]);
        let pairs = mutual_edge_pairs(&g);
        assert_eq!(
            pairs,
            vec![
                MutualPair { i: 0, j: 1, p_ij: 3.0 / 7.0, p_ji: 1.0 },
                MutualPair { i: 0, j: 2, p_ij: 4.0 / 7.0, p_ji: 4.0 / 6.0 },
            ]
        );
        let sym = graph(3, &[(0, 1, 2), (1, 0, 2), (1, 2, 2), (2, 1, 2), (0, 2, 2), (2, 0, 2)]);
        assert!(mutual_edge_pairs(&sym).iter().all(|p| p.p_ij == p.p_ji));
        assert!(mutual_edge_pairs(&graph(2, &[(0, 1, 1)])).is_empty());
    }

    #[test]
    fn pearson_known_values() {
        let c = pearson(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.0, 6.0, 8.0]).unwrap();
        assert_eq!((c.r, c.p_value), (1.0, 0.0));
        // r = 0.8 on n = 5: t = 0.8 * sqrt(3 / 0.36) = 2.3094, two-sided p = 0.10409
        let c = pearson(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap();
        assert!((c.r - 0.8).abs() < 1e-12);
        assert!((c.p_value - 0.104088).abs() < 1e-5);
        assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    proptest! {
        #[test]
        fn degree_and_strength_sums(seed in any::<u64>(), n in 2usize..15, p in 0.0f64..1.0) {
            let g = random(seed, n, p, 20);
            let profiles = node_profiles(&g);
            prop_assert_eq!(profiles.iter().map(|x| x.in_degree).sum::<usize>(), g.edge_count());
            prop_assert_eq!(profiles.iter().map(|x| x.out_degree).sum::<usize>(), g.edge_count());
            prop_assert_eq!(profiles.iter().map(|x| x.in_strength).sum::<u64>(), g.total_weight());
            prop_assert_eq!(profiles.iter().map(|x| x.out_strength).sum::<u64>(), g.total_weight());
            for x in &profiles {
                prop_assert!(x.in_degree < n);
            }
        }

        #[test]
        fn transition_rows_sum_to_one(seed in any::<u64>(), n in 2usize..20) {
            let g = random(seed, n, 0.5, 1000);
            let t = transition_probabilities(&g);
            for i in 0..n {
                if let Some(row) = t.row(i) {
                    let s: f64 = row.iter().map(|&(_, p)| p).sum();
                    prop_assert!((s - 1.0).abs() <= 1e-12);
                    prop_assert!(row.iter().all(|&(_, p)| p > 0.0 && p <= 1.0));
                }
            }
        }

        #[test]
        fn disparity_within_bounds(seed in any::<u64>(), n in 2usize..20) {
            let g = random(seed, n, 0.5, 50);
            for (i, gamma) in disparity(&g).into_iter().enumerate() {
                if let Some(gamma) = gamma {
                    let k = g.out_edges(i).len() as f64;
                    prop_assert!(gamma >= 1.0 - 1e-12 && gamma <= k + 1e-12);
                }
            }
        }
    }
}
