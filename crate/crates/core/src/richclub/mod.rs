//! Topological and weighted rich-club coefficients, normalized against
//! randomized null ensembles.
//!
//! Thresholds run over the distinct richness values present in the graph;
//! the club at threshold `r` is the set of nodes whose richness exceeds `r`.

mod null;

pub use null::{null_rewire, null_weight_reshuffle, RewireReport, DEFAULT_SWAPS_PER_EDGE};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{seed, DiffusionGraph};

/// Node ranking used to define the club.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Richness {
    /// In-degree plus out-degree.
    Degree,
    /// In-strength plus out-strength.
    #[default]
    TotalStrength,
    OutStrength,
}

pub fn richness(g: &DiffusionGraph, kind: Richness) -> Vec<u64> {
    (0..g.node_count())
        .map(|i| match kind {
            Richness::Degree => (g.in_edges(i).len() + g.out_edges(i).len()) as u64,
            Richness::TotalStrength => g.in_strength(i) + g.out_strength(i),
            Richness::OutStrength => g.out_strength(i),
        })
        .collect()
}

/// One evaluation of the topological coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologicalPoint {
    /// Nodes with total degree above the threshold.
    pub club_size: usize,
    /// Directed edges inside the club.
    pub club_edges: usize,
    /// `2 m / (n (n - 1))` as written for undirected graphs; with directed
    /// `m` this ranges up to 2. `None` when the club has fewer than 2 nodes.
    pub phi: Option<f64>,
    /// `m / (n (n - 1))`, the directed density of the club.
    pub directed_density: Option<f64>,
}

fn topological_point(n: usize, m: usize) -> TopologicalPoint {
    let pairs = n as f64 * n.saturating_sub(1) as f64;
    let defined = n >= 2;
    TopologicalPoint {
        club_size: n,
        club_edges: m,
        phi: defined.then(|| 2.0 * m as f64 / pairs),
        directed_density: defined.then(|| m as f64 / pairs),
    }
}

/// Topological rich-club coefficient at degree threshold `k`.
pub fn topological_rc(g: &DiffusionGraph, k: u64) -> TopologicalPoint {
    let deg = richness(g, Richness::Degree);
    let n = deg.iter().filter(|&&d| d > k).count();
    let m = g.edges().filter(|&(i, j, _)| deg[i] > k && deg[j] > k).count();
    topological_point(n, m)
}

/// Weighted rich-club coefficient: weight carried by edges among nodes with
/// `richness > r`, over the sum of the `E_{>r}` largest weights in the whole
/// graph. `None` when the club holds no edge.
pub fn weighted_rc(g: &DiffusionGraph, richness: &[u64], r: u64) -> Option<f64> {
    let (mut e, mut w) = (0usize, 0u64);
    for (i, j, wij) in g.edges() {
        if richness[i] > r && richness[j] > r {
            e += 1;
            w += wij;
        }
    }
    if e == 0 {
        return None;
    }
    let mut ranked: Vec<u64> = g.edges().map(|(_, _, w)| w).collect();
    ranked.sort_unstable_by(|a, b| b.cmp(a));
    let best: u64 = ranked[..e].iter().sum();
    Some(w as f64 / best as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RichClubMode {
    /// Degree clubs, degree-preserving rewiring null.
    Topological,
    /// Strength clubs, local out-weight reshuffling null.
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RichClubOptions {
    pub n_null: usize,
    pub seed: u64,
    /// Club ranking in weighted mode; topological mode always uses degree.
    pub richness: Richness,
    pub swaps_per_edge: u32,
}

impl Default for RichClubOptions {
    fn default() -> Self {
        RichClubOptions {
            n_null: 100,
            seed: 0,
            richness: Richness::TotalStrength,
            swaps_per_edge: DEFAULT_SWAPS_PER_EDGE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichClubPoint {
    pub threshold: u64,
    pub club_size: usize,
    pub raw: Option<f64>,
    /// Topological mode only: directed density of the club.
    pub raw_directed: Option<f64>,
    pub null_mean: Option<f64>,
    pub null_sd: Option<f64>,
    /// `raw / null_mean`; `None` where either is undefined or the mean is 0.
    pub normalized: Option<f64>,
    /// Fraction of null instances with coefficient `>= raw`.
    pub p_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichClubCurve {
    pub mode: RichClubMode,
    pub richness: Richness,
    pub n_null: usize,
    pub seed: u64,
    pub swaps_per_edge: u32,
    pub points: Vec<RichClubPoint>,
}

/// Club coefficients of `g` at every threshold, with club membership fixed by
/// `rich` (node identities survive both null models).
fn coefficient_curve(g: &DiffusionGraph, rich: &[u64], thresholds: &[u64], mode: RichClubMode) -> Vec<Option<f64>> {
    // An edge sits inside the clubs of every threshold below min(rich_i, rich_j),
    // i.e. thresholds[..pos]; accumulate with a suffix sum.
    let t = thresholds.len();
    let mut edges_at = vec![0usize; t + 1];
    let mut weight_at = vec![0u64; t + 1];
    for (i, j, w) in g.edges() {
        let pos = thresholds.partition_point(|&r| r < rich[i].min(rich[j]));
        edges_at[pos] += 1;
        weight_at[pos] += w;
    }
    let mut nodes_at = vec![0usize; t + 1];
    for &r in rich {
        nodes_at[thresholds.partition_point(|&x| x < r)] += 1;
    }
    for p in (0..t).rev() {
        edges_at[p] += edges_at[p + 1];
        weight_at[p] += weight_at[p + 1];
        nodes_at[p] += nodes_at[p + 1];
    }
    match mode {
        RichClubMode::Topological => (0..t)
            .map(|p| topological_point(nodes_at[p + 1], edges_at[p + 1]).phi)
            .collect(),
        RichClubMode::Weighted => {
            let mut ranked: Vec<u64> = g.edges().map(|(_, _, w)| w).collect();
            ranked.sort_unstable_by(|a, b| b.cmp(a));
            let mut prefix = vec![0u64; ranked.len() + 1];
            for (k, w) in ranked.iter().enumerate() {
                prefix[k + 1] = prefix[k] + w;
            }
            (0..t)
                .map(|p| {
                    let e = edges_at[p + 1];
                    (e > 0).then(|| weight_at[p + 1] as f64 / prefix[e] as f64)
                })
                .collect()
        }
    }
}

/// Raw coefficient curve and its normalization against `n_null` null graphs.
///
/// Null instance `i` is drawn with seed `derive(seed, i)`, so the curve is a
/// function of `(g, mode, options)` alone regardless of thread scheduling.
pub fn normalized_rc(g: &DiffusionGraph, mode: RichClubMode, options: &RichClubOptions) -> RichClubCurve {
    let richness_kind = match mode {
        RichClubMode::Topological => Richness::Degree,
        RichClubMode::Weighted => options.richness,
    };
    let rich = richness(g, richness_kind);
    let mut thresholds = rich.clone();
    thresholds.sort_unstable();
    thresholds.dedup();

    let raw = coefficient_curve(g, &rich, &thresholds, mode);
    let nulls: Vec<Vec<Option<f64>>> = (0..options.n_null)
        .into_par_iter()
        .map(|k| {
            let s = seed::derive(options.seed, k as u64);
            let null = match mode {
                RichClubMode::Topological => null_rewire(g, s, options.swaps_per_edge).0,
                RichClubMode::Weighted => null_weight_reshuffle(g, s),
            };
            coefficient_curve(&null, &rich, &thresholds, mode)
        })
        .collect();

    let points = thresholds
        .iter()
        .enumerate()
        .map(|(p, &threshold)| {
            let club_size = rich.iter().filter(|&&r| r > threshold).count();
            let raw_directed = match mode {
                RichClubMode::Topological => raw[p].map(|phi| phi / 2.0),
                RichClubMode::Weighted => None,
            };
            // Welford, in instance order
            let (mut count, mut mean, mut m2, mut above) = (0usize, 0.0f64, 0.0f64, 0usize);
            for v in nulls.iter().filter_map(|curve| curve[p]) {
                count += 1;
                let delta = v - mean;
                mean += delta / count as f64;
                m2 += delta * (v - mean);
                if raw[p].is_some_and(|r| v >= r) {
                    above += 1;
                }
            }
            let null_mean = (count > 0).then_some(mean);
            let null_sd = match count {
                0 => None,
                1 => Some(0.0),
                _ => Some((m2 / (count - 1) as f64).sqrt()),
            };
            let normalized = match (raw[p], null_mean) {
                (Some(r), Some(m)) if m > 0.0 => Some(r / m),
                _ => None,
            };
            let p_estimate = (raw[p].is_some() && count > 0).then(|| above as f64 / count as f64);
            RichClubPoint {
                threshold,
                club_size,
                raw: raw[p],
                raw_directed,
                null_mean,
                null_sd,
                normalized,
                p_estimate,
            }
        })
        .collect();

    RichClubCurve {
        mode,
        richness: richness_kind,
        n_null: options.n_null,
        seed: options.seed,
        swaps_per_edge: options.swaps_per_edge,
        points,
    }
}

/// The `size` richest nodes (ties broken by node order).
pub fn top_club(g: &DiffusionGraph, kind: Richness, size: usize) -> Vec<usize> {
    let rich = richness(g, kind);
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(rich[i]), i));
    order.truncate(size);
    order
}
