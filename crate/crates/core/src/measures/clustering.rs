//! Weighted directed clustering coefficient in the Clemente-Grassi form
//!
//! ```text
//! C_i = 0.5 [(W + W^T)(A + A^T)^2]_ii / (s_i (d_i - 1) - 2 s_i<->)
//! ```
//!
//! where `d_i` is total degree, `s_i` total strength and `s_i<->` the
//! strength of bilateral arcs. The unweighted variant substitutes `A` for `W`.

use serde::{Deserialize, Serialize};

use crate::DiffusionGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusteringMode {
    /// Weights divided by the global maximum weight, so they lie in (0, 1].
    Weighted,
    Unweighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub mode: ClusteringMode,
    /// Divisor applied to raw weights (max weight for `Weighted`, 1 otherwise).
    pub weight_scale: f64,
    pub values: Vec<f64>,
    /// Nodes whose denominator vanishes (fewer than two distinct neighbours);
    /// their value is reported as 0.
    pub degenerate: Vec<bool>,
}

pub fn clustering(g: &DiffusionGraph, mode: ClusteringMode) -> Clustering {
    let n = g.node_count();
    let weight_scale = match mode {
        ClusteringMode::Weighted => g.max_weight().max(1) as f64,
        ClusteringMode::Unweighted => 1.0,
    };
    let weight = |w: u64| match mode {
        ClusteringMode::Weighted => w as f64 / weight_scale,
        ClusteringMode::Unweighted => 1.0,
    };

    // B = A + A^T, S = W + W^T (dense; n is the number of countries)
    let mut b = vec![0.0f64; n * n];
    let mut s = vec![0.0f64; n * n];
    for (i, j, w) in g.edges() {
        b[i * n + j] += 1.0;
        b[j * n + i] += 1.0;
        s[i * n + j] += weight(w);
        s[j * n + i] += weight(w);
    }

    let mut values = vec![0.0; n];
    let mut degenerate = vec![false; n];
    for i in 0..n {
        // [S B^2]_ii = sum_j S_ij sum_k B_jk B_ki
        let mut numerator = 0.0;
        for j in 0..n {
            let sij = s[i * n + j];
            if sij == 0.0 {
                continue;
            }
            let row_j = &b[j * n..(j + 1) * n];
            let col_i = (0..n).map(|k| b[k * n + i]);
            let bb: f64 = row_j.iter().zip(col_i).map(|(x, y)| x * y).sum();
            numerator += sij * bb;
        }
        numerator *= 0.5;

        let degree = (g.out_edges(i).len() + g.in_edges(i).len()) as f64;
        let strength: f64 = g
            .out_edges(i)
            .iter()
            .chain(g.in_edges(i))
            .map(|&(_, w)| weight(w))
            .sum();
        let bilateral: f64 = g
            .out_edges(i)
            .iter()
            .filter(|&&(j, _)| g.has_edge(j, i))
            .map(|&(j, w)| (weight(w) + weight(g.weight(j, i))) / 2.0)
            .sum();
        let denominator = strength * (degree - 1.0) - 2.0 * bilateral;

        let neighbours = (0..n).filter(|&j| b[i * n + j] > 0.0).count();
        if neighbours < 2 || denominator <= 0.0 {
            degenerate[i] = true;
        } else {
            values[i] = numerator / denominator;
        }
    }
    Clustering { mode, weight_scale, values, degenerate }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrengthKind {
    In,
    Out,
    #[default]
    Total,
}

/// Logarithmic binning: `per_decade` bins per factor `base`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrengthBins {
    pub base: f64,
    pub per_decade: u32,
}

impl Default for StrengthBins {
    fn default() -> Self {
        StrengthBins { base: 10.0, per_decade: 10 }
    }
}

impl StrengthBins {
    fn index(&self, s: f64) -> i64 {
        // nudge so exact bin edges (e.g. s = 10) land in the upper bin
        ((s.ln() / self.base.ln()) * self.per_decade as f64 + 1e-9).floor() as i64
    }

    fn edges(&self, idx: i64) -> (f64, f64) {
        let step = 1.0 / self.per_decade as f64;
        (self.base.powf(idx as f64 * step), self.base.powf((idx + 1) as f64 * step))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthBin {
    pub lower: f64,
    pub upper: f64,
    /// Geometric centre of the bin.
    pub center: f64,
    pub count: usize,
    pub unweighted_mean: f64,
    pub weighted_mean: f64,
}

/// Mean unweighted and weighted clustering over nodes grouped by strength.
/// Nodes of zero strength are skipped; empty bins are not emitted.
pub fn clustering_by_strength(
    g: &DiffusionGraph,
    unweighted: &Clustering,
    weighted: &Clustering,
    kind: StrengthKind,
    bins: StrengthBins,
) -> Vec<StrengthBin> {
    let mut acc: std::collections::BTreeMap<i64, (usize, f64, f64)> = Default::default();
    for i in 0..g.node_count() {
        let s = match kind {
            StrengthKind::In => g.in_strength(i),
            StrengthKind::Out => g.out_strength(i),
            StrengthKind::Total => g.in_strength(i) + g.out_strength(i),
        };
        if s == 0 {
            continue;
        }
        let e = acc.entry(bins.index(s as f64)).or_default();
        e.0 += 1;
        e.1 += unweighted.values[i];
        e.2 += weighted.values[i];
    }
    acc.into_iter()
        .map(|(idx, (count, cu, cw))| {
            let (lower, upper) = bins.edges(idx);
            StrengthBin {
                lower,
                upper,
                center: (lower * upper).sqrt(),
                count,
                unweighted_mean: cu / count as f64,
                weighted_mean: cw / count as f64,
            }
        })
        .collect()
}
