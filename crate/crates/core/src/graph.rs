//! The aggregated country network and its delimited edge/node-list format.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::artifact::read_table;
use crate::{Country, Error, Result};

pub const EDGE_HEADER: [&str; 3] = ["src", "dst", "weight"];
pub const NODE_HEADER: [&str; 1] = ["country"];

/// Simple weighted directed graph over countries: positive integer weights,
/// no self-loops, at most one edge per ordered pair.
///
/// Nodes are kept sorted by country code, so node indices follow code order
/// and every iteration over the graph is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffusionGraph {
    nodes: Vec<Country>,
    index: HashMap<Country, usize>,
    out: Vec<Vec<(usize, u64)>>,
    inc: Vec<Vec<(usize, u64)>>,
    edge_count: usize,
}

impl DiffusionGraph {
    /// Builds a graph from a node set and an edge list. Endpoints missing from
    /// `nodes` are added. Loops, zero weights and repeated pairs are rejected.
    pub fn new(
        nodes: impl IntoIterator<Item = Country>,
        edges: impl IntoIterator<Item = (Country, Country, u64)>,
    ) -> Result<Self> {
        let edges: Vec<_> = edges.into_iter().collect();
        let mut set: BTreeSet<Country> = nodes.into_iter().collect();
        for (src, dst, _) in &edges {
            set.insert(src.clone());
            set.insert(dst.clone());
        }
        let nodes: Vec<Country> = set.into_iter().collect();
        let index: HashMap<Country, usize> =
            nodes.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        let indexed = edges
            .into_iter()
            .map(|(src, dst, w)| (index[&src], index[&dst], w))
            .collect();
        Self::assemble(nodes, index, indexed)
    }

    /// Same node set as `self` with a different edge list given by node index.
    /// Used by the null models.
    pub fn with_edges(&self, edges: Vec<(usize, usize, u64)>) -> Result<Self> {
        Self::assemble(self.nodes.clone(), self.index.clone(), edges)
    }

    fn assemble(
        nodes: Vec<Country>,
        index: HashMap<Country, usize>,
        edges: Vec<(usize, usize, u64)>,
    ) -> Result<Self> {
        let n = nodes.len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for &(i, j, w) in &edges {
            if i >= n || j >= n {
                return Err(Error::Malformed(format!("edge ({i},{j}) outside node range")));
            }
            if i == j {
                return Err(Error::Malformed(format!("self-loop on {}", nodes[i])));
            }
            if w == 0 {
                return Err(Error::Malformed(format!(
                    "zero weight on {} -> {}",
                    nodes[i], nodes[j]
                )));
            }
            out[i].push((j, w));
            inc[j].push((i, w));
        }
        for (i, list) in out.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(pair) = list.windows(2).find(|p| p[0].0 == p[1].0) {
                return Err(Error::Malformed(format!(
                    "repeated edge {} -> {}",
                    nodes[i], nodes[pair[0].0]
                )));
            }
        }
        for list in &mut inc {
            list.sort_unstable();
        }
        Ok(DiffusionGraph {
            nodes,
            index,
            out,
            inc,
            edge_count: edges.len(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> &[Country] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Country {
        &self.nodes[i]
    }

    pub fn index_of(&self, country: &Country) -> Option<usize> {
        self.index.get(country).copied()
    }

    /// Out-neighbours of `i` with weights, sorted by neighbour index.
    pub fn out_edges(&self, i: usize) -> &[(usize, u64)] {
        &self.out[i]
    }

    /// In-neighbours of `i` with weights, sorted by neighbour index.
    pub fn in_edges(&self, i: usize) -> &[(usize, u64)] {
        &self.inc[i]
    }

    /// Weight of `i -> j`, 0 when absent.
    pub fn weight(&self, i: usize, j: usize) -> u64 {
        let list = &self.out[i];
        list.binary_search_by_key(&j, |&(t, _)| t)
            .map(|pos| list[pos].1)
            .unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weight(i, j) > 0
    }

    /// All edges as `(src, dst, weight)` in (src, dst) order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |&(j, w)| (i, j, w)))
    }

    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    pub fn max_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| w).max().unwrap_or(0)
    }

    pub fn out_strength(&self, i: usize) -> u64 {
        self.out[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn in_strength(&self, i: usize) -> u64 {
        self.inc[i].iter().map(|&(_, w)| w).sum()
    }

    /// Number of nodes with at least one incident edge.
    pub fn edge_bearing_node_count(&self) -> usize {
        (0..self.node_count())
            .filter(|&i| !self.out[i].is_empty() || !self.inc[i].is_empty())
            .count()
    }

    pub fn write_edge_list(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{}", EDGE_HEADER.join("\t"))?;
        for (i, j, weight) in self.edges() {
            writeln!(w, "{}\t{}\t{}", self.nodes[i], self.nodes[j], weight)?;
        }
        Ok(())
    }

    pub fn write_node_list(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{}", NODE_HEADER.join("\t"))?;
        for c in &self.nodes {
            writeln!(w, "{c}")?;
        }
        Ok(())
    }

    /// Reads the pair of files written by [`write_edge_list`](Self::write_edge_list)
    /// and [`write_node_list`](Self::write_node_list); `#` metadata lines are skipped.
    pub fn read(edges: impl BufRead, nodes: impl BufRead) -> Result<Self> {
        let node_rows = read_table(nodes, &NODE_HEADER)?;
        let mut node_set = Vec::with_capacity(node_rows.len());
        for row in node_rows {
            node_set.push(parse_country(&row[0])?);
        }
        let edge_rows = read_table(edges, &EDGE_HEADER)?;
        let mut list = Vec::with_capacity(edge_rows.len());
        for row in edge_rows {
            let w: u64 = row[2]
                .parse()
                .map_err(|_| Error::Malformed(format!("bad edge weight {:?}", row[2])))?;
            list.push((parse_country(&row[0])?, parse_country(&row[1])?, w));
        }
        DiffusionGraph::new(node_set, list)
    }
}

fn parse_country(s: &str) -> Result<Country> {
    Country::parse(s).ok_or_else(|| Error::Malformed(format!("bad country code {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Country {
        Country::from(s)
    }

    #[test]
    fn rejects_loops_zero_weights_and_repeats() {
        assert!(DiffusionGraph::new([], [(c("UK"), c("UK"), 1)]).is_err());
        assert!(DiffusionGraph::new([], [(c("UK"), c("US"), 0)]).is_err());
        assert!(DiffusionGraph::new([], [(c("UK"), c("US"), 1), (c("UK"), c("US"), 2)]).is_err());
    }

    #[test]
    fn keeps_isolated_nodes_and_sorted_order() {
        let g = DiffusionGraph::new([c("ZZ")], [(c("US"), c("FR"), 3)]).unwrap();
        assert_eq!(g.nodes(), &[c("FR"), c("US"), c("ZZ")]);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge_bearing_node_count(), 2);
        assert_eq!(g.weight(1, 0), 3);
        assert_eq!(g.weight(0, 1), 0);
    }

    #[test]
    fn edge_and_node_lists_round_trip() {
        let g = DiffusionGraph::new(
            [c("AA")],
            [(c("UK"), c("US"), 2), (c("US"), c("UK"), 5), (c("FR"), c("UK"), 1)],
        )
        .unwrap();
        let mut e = Vec::new();
        let mut n = Vec::new();
        g.write_edge_list(&mut e).unwrap();
        g.write_node_list(&mut n).unwrap();
        let mut e2 = b"# tool: test\n".to_vec();
        e2.extend_from_slice(&e);
        let back = DiffusionGraph::read(&e2[..], &n[..]).unwrap();
        assert_eq!(back, g);
    }
}
