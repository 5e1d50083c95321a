use serde::{Deserialize, Serialize};

use crate::{DiffusionGraph, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitsConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for HitsConfig {
    fn default() -> Self {
        HitsConfig { tolerance: 1e-10, max_iterations: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitsScores {
    pub authority: Vec<f64>,
    pub hub: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Weighted HITS by power iteration.
///
/// Starts from `x = y = 1`, then repeats: authority `x(p) = sum_{q->p} w_qp y(q)`,
/// hub `y(p) = sum_{p->q} w_pq x(q)` using the fresh authorities, and
/// L2-normalizes both. Stops once neither vector moves by more than
/// `tolerance` in any coordinate.
pub fn hits(g: &DiffusionGraph, config: HitsConfig) -> Result<HitsScores> {
    if g.edge_count() == 0 {
        return Err(Error::Undefined("HITS on a graph without edges"));
    }
    if config.tolerance.is_nan() || config.tolerance <= 0.0 {
        return Err(Error::Config("HITS tolerance must be positive".into()));
    }
    let n = g.node_count();
    let mut x = vec![1.0; n];
    let mut y = vec![1.0; n];
    let mut next_x = vec![0.0; n];
    let mut next_y = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        for (p, x) in next_x.iter_mut().enumerate() {
            *x = g.in_edges(p).iter().map(|&(q, w)| w as f64 * y[q]).sum();
        }
        normalize(&mut next_x);
        for (p, y) in next_y.iter_mut().enumerate() {
            *y = g.out_edges(p).iter().map(|&(q, w)| w as f64 * next_x[q]).sum();
        }
        normalize(&mut next_y);
        let delta = x
            .iter()
            .zip(&next_x)
            .chain(y.iter().zip(&next_y))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next_x);
        std::mem::swap(&mut y, &mut next_y);
        if delta < config.tolerance {
            converged = true;
            break;
        }
    }
    Ok(HitsScores { authority: x, hub: y, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::testgraphs::graph;

    #[test]
    fn star_hub_and_split_authorities() {
        let g = graph(3, &[(0, 1, 1), (0, 2, 1)]);
        let h = hits(&g, HitsConfig::default()).unwrap();
        assert!(h.converged);
        assert!((h.hub[0] - 1.0).abs() < 1e-12);
        assert_eq!(&h.hub[1..], &[0.0, 0.0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h.authority[1] - r).abs() < 1e-12 && (h.authority[2] - r).abs() < 1e-12);
        assert_eq!(h.authority[0], 0.0);
    }

    #[test]
    fn symmetric_pair_has_equal_scores() {
        let h = hits(&graph(2, &[(0, 1, 3), (1, 0, 3)]), HitsConfig::default()).unwrap();
        for (x, y) in h.authority.iter().zip(&h.hub) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_graph_is_an_error() {
        assert!(hits(&graph(3, &[]), HitsConfig::default()).is_err());
        let bad = HitsConfig { tolerance: 0.0, ..Default::default() };
        assert!(hits(&graph(2, &[(0, 1, 1)]), bad).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let g = graph(4, &[(0, 1, 5), (1, 2, 3), (2, 0, 1), (3, 0, 2), (0, 3, 7)]);
        let h = hits(&g, HitsConfig { tolerance: 1e-300, max_iterations: 3 }).unwrap();
        assert!(!h.converged);
        assert_eq!(h.iterations, 3);
    }
}
