//! Per-event sequential-mention graphs and their aggregation into the
//! country diffusion network.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::read_table;
use crate::ingest::EventTrace;
use crate::{Country, DiffusionGraph, Error, Result};

/// Directed multigraph of one event: `(i, j)` with multiplicity `m` means
/// country `j` mentioned the event in the bucket right after one in which `i`
/// did, `m` times over the trace. Self-pairs are kept here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventGraph {
    pub event_id: String,
    pub nodes: BTreeSet<Country>,
    pub edges: BTreeMap<(Country, Country), u64>,
}

impl EventGraph {
    pub fn total_multiplicity(&self) -> u64 {
        self.edges.values().sum()
    }
}

/// Links every country of each listed bucket to every country of the next
/// listed bucket. Gaps between listed buckets do not break the chain.
pub fn event_graph(trace: &EventTrace) -> EventGraph {
    let mut edges: BTreeMap<(Country, Country), u64> = BTreeMap::new();
    for pair in trace.buckets().windows(2) {
        let (from, to) = (&pair[0].1, &pair[1].1);
        for i in from {
            for j in to {
                *edges.entry((i.clone(), j.clone())).or_default() += 1;
            }
        }
    }
    EventGraph {
        event_id: trace.event_id().to_string(),
        nodes: trace.buckets().iter().flat_map(|(_, s)| s.iter().cloned()).collect(),
        edges,
    }
}

/// Commutative monoid of summed edge weights. Loops are dropped on entry and
/// their mass is tallied separately.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeAccumulator {
    nodes: BTreeSet<Country>,
    weights: BTreeMap<(Country, Country), u64>,
    loop_mass: u64,
}

impl EdgeAccumulator {
    pub fn add(&mut self, graph: &EventGraph) {
        self.nodes.extend(graph.nodes.iter().cloned());
        for ((i, j), &m) in &graph.edges {
            if i == j {
                self.loop_mass += m;
            } else {
                *self.weights.entry((i.clone(), j.clone())).or_default() += m;
            }
        }
    }

    pub fn merge(mut self, other: EdgeAccumulator) -> EdgeAccumulator {
        let (mut big, small) = if self.weights.len() >= other.weights.len() {
            (std::mem::take(&mut self), other)
        } else {
            (other, std::mem::take(&mut self))
        };
        big.nodes.extend(small.nodes);
        for (k, w) in small.weights {
            *big.weights.entry(k).or_default() += w;
        }
        big.loop_mass += small.loop_mass;
        big
    }

    /// Total multiplicity discarded as self-loops.
    pub fn loop_mass(&self) -> u64 {
        self.loop_mass
    }

    pub fn into_graph(self) -> DiffusionGraph {
        DiffusionGraph::new(
            self.nodes,
            self.weights.into_iter().map(|((i, j), w)| (i, j, w)),
        )
        .expect("accumulated edges are loop-free, positive and unique")
    }
}

/// Overlays event graphs: `w_ij = sum_k w^k_ij` for `i != j`. Every country
/// seen in any event is a node, including ones with no surviving edge.
pub fn aggregate<'a>(graphs: impl IntoIterator<Item = &'a EventGraph>) -> DiffusionGraph {
    let mut acc = EdgeAccumulator::default();
    for g in graphs {
        acc.add(g);
    }
    acc.into_graph()
}

/// Builds the event graphs and aggregates them in parallel. Returns the
/// network and the discarded loop mass.
///
/// Equivalent to [`aggregate`] over [`event_graph`] of every trace, but works
/// on country indices so no per-event maps are built.
pub fn build_network(traces: &[EventTrace]) -> (DiffusionGraph, u64) {
    let universe: BTreeSet<Country> = traces
        .par_iter()
        .fold(BTreeSet::new, |mut set, t| {
            set.extend(t.buckets().iter().flat_map(|(_, s)| s.iter().cloned()));
            set
        })
        .reduce(BTreeSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    let nodes: Vec<Country> = universe.into_iter().collect();
    let index: HashMap<&Country, u32> = nodes.iter().enumerate().map(|(i, c)| (c, i as u32)).collect();
    let n = nodes.len();

    let acc = traces
        .par_iter()
        .fold(
            || PairCounts::new(n),
            |mut acc, t| {
                let sets: Vec<Vec<u32>> =
                    t.buckets().iter().map(|(_, s)| s.iter().map(|c| index[c]).collect()).collect();
                for pair in sets.windows(2) {
                    for &i in &pair[0] {
                        for &j in &pair[1] {
                            acc.add(i, j, 1);
                        }
                    }
                }
                acc
            },
        )
        .reduce(|| PairCounts::new(n), PairCounts::merge);

    let loops = acc.loop_mass;
    let edges = acc
        .into_edges()
        .into_iter()
        .map(|(i, j, w)| (nodes[i as usize].clone(), nodes[j as usize].clone(), w));
    let graph = DiffusionGraph::new(nodes.iter().cloned(), edges)
        .expect("accumulated edges are loop-free, positive and unique");
    (graph, loops)
}

/// Ordered-pair counts over `n` indexed countries; dense for small `n`.
struct PairCounts {
    n: usize,
    dense: Vec<u64>,
    sparse: HashMap<(u32, u32), u64>,
    loop_mass: u64,
}

const DENSE_LIMIT: usize = 1024;

impl PairCounts {
    fn new(n: usize) -> Self {
        PairCounts {
            n,
            dense: if n <= DENSE_LIMIT { vec![0; n * n] } else { Vec::new() },
            sparse: HashMap::new(),
            loop_mass: 0,
        }
    }

    fn add(&mut self, i: u32, j: u32, m: u64) {
        if i == j {
            self.loop_mass += m;
        } else if self.dense.is_empty() {
            *self.sparse.entry((i, j)).or_default() += m;
        } else {
            self.dense[i as usize * self.n + j as usize] += m;
        }
    }

    fn merge(mut self, other: PairCounts) -> PairCounts {
        for (a, b) in self.dense.iter_mut().zip(&other.dense) {
            *a += b;
        }
        for ((i, j), m) in other.sparse {
            *self.sparse.entry((i, j)).or_default() += m;
        }
        self.loop_mass += other.loop_mass;
        self
    }

    fn into_edges(self) -> Vec<(u32, u32, u64)> {
        if self.dense.is_empty() {
            let mut edges: Vec<_> = self.sparse.into_iter().map(|((i, j), w)| (i, j, w)).collect();
            edges.sort_unstable();
            edges
        } else {
            let n = self.n;
            self.dense
                .into_iter()
                .enumerate()
                .filter(|&(_, w)| w > 0)
                .map(|(k, w)| ((k / n) as u32, (k % n) as u32, w))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventStats {
    pub event_id: String,
    pub initial_spreaders: BTreeSet<Country>,
    /// Number of distinct countries that mentioned the event.
    pub virality: usize,
}

pub fn event_stats(trace: &EventTrace) -> EventStats {
    let all: BTreeSet<&Country> = trace.buckets().iter().flat_map(|(_, s)| s).collect();
    EventStats {
        event_id: trace.event_id().to_string(),
        initial_spreaders: trace.buckets()[0].1.clone(),
        virality: all.len(),
    }
}

/// Number of events each country initially spread. Every country in
/// `universe` is reported, with 0 if it never was an initial spreader.
pub fn spreader_scores<'a>(
    stats: impl IntoIterator<Item = &'a EventStats>,
    universe: impl IntoIterator<Item = &'a Country>,
) -> BTreeMap<Country, u64> {
    let mut scores: BTreeMap<Country, u64> = universe.into_iter().map(|c| (c.clone(), 0)).collect();
    for s in stats {
        for c in &s.initial_spreaders {
            *scores.entry(c.clone()).or_default() += 1;
        }
    }
    scores
}

/// Histogram virality -> number of events.
pub fn virality_distribution<'a>(stats: impl IntoIterator<Item = &'a EventStats>) -> BTreeMap<usize, u64> {
    let mut hist = BTreeMap::new();
    for s in stats {
        *hist.entry(s.virality).or_default() += 1;
    }
    hist
}

pub const EVENT_STATS_HEADER: [&str; 3] = ["event_id", "virality", "initial_spreaders"];

pub fn write_event_stats<'a>(
    stats: impl IntoIterator<Item = &'a EventStats>,
    w: &mut dyn Write,
) -> std::io::Result<()> {
    writeln!(w, "{}", EVENT_STATS_HEADER.join("\t"))?;
    for s in stats {
        let initial: Vec<&str> = s.initial_spreaders.iter().map(Country::as_str).collect();
        writeln!(w, "{}\t{}\t{}", s.event_id, s.virality, initial.join("+"))?;
    }
    Ok(())
}

pub fn read_event_stats(reader: impl BufRead) -> Result<Vec<EventStats>> {
    read_table(reader, &EVENT_STATS_HEADER)?
        .into_iter()
        .map(|row| {
            let virality = row[1]
                .parse()
                .map_err(|_| Error::Malformed(format!("bad virality {:?}", row[1])))?;
            let initial_spreaders = row[2]
                .split('+')
                .map(|c| Country::parse(c).ok_or_else(|| Error::Malformed(format!("bad country {c:?}"))))
                .collect::<Result<_>>()?;
            Ok(EventStats {
                event_id: row[0].clone(),
                initial_spreaders,
                virality,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(codes: &[&str]) -> BTreeSet<Country> {
        codes.iter().map(|&c| Country::from(c)).collect()
    }

    fn trace(id: &str, buckets: &[&[&str]]) -> EventTrace {
        EventTrace::new(
            id,
            buckets.iter().enumerate().map(|(t, cs)| (t as u64 * 3, set(cs))).collect(),
        )
        .unwrap()
    }

    fn edges(g: &EventGraph) -> Vec<(&str, &str, u64)> {
        g.edges.iter().map(|((i, j), &w)| (i.as_str(), j.as_str(), w)).collect()
    }

    #[test]
    fn one_transition_is_a_product() {
        let g = event_graph(&trace("E", &[&["UK"], &["US", "FR"]]));
        assert_eq!(edges(&g), vec![("UK", "FR", 1), ("UK", "US", 1)]);
    }

    #[test]
    fn back_and_forth() {
        let g = event_graph(&trace("E", &[&["UK"], &["US"], &["UK"]]));
        assert_eq!(edges(&g), vec![("UK", "US", 1), ("US", "UK", 1)]);
    }

    #[test]
    fn loops_kept_per_event_then_dropped() {
        let g = event_graph(&trace("E", &[&["UK", "US"], &["UK"]]));
        assert_eq!(edges(&g), vec![("UK", "UK", 1), ("US", "UK", 1)]);
        let agg = aggregate([&g]);
        assert_eq!(agg.edge_count(), 1);
        assert_eq!(agg.weight(agg.index_of(&"US".into()).unwrap(), agg.index_of(&"UK".into()).unwrap()), 1);
    }

    #[test]
    fn single_bucket_gives_no_edges_but_keeps_node() {
        let g = event_graph(&trace("E", &[&["XX"]]));
        assert!(g.edges.is_empty());
        let agg = aggregate([&g]);
        assert_eq!(agg.node_count(), 1);
        assert_eq!(agg.edge_count(), 0);
    }

    #[test]
    fn aggregation_is_additive() {
        let a = event_graph(&trace("A", &[&["UK"], &["US"]]));
        let b = event_graph(&trace("B", &[&["UK"], &["US"]]));
        let g = aggregate([&a, &b]);
        assert_eq!(g.total_weight(), 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn loop_only_input_is_empty() {
        let g = EventGraph {
            event_id: "E".into(),
            nodes: set(&["UK"]),
            edges: [(("UK".into(), "UK".into()), 5)].into_iter().collect(),
        };
        let mut acc = EdgeAccumulator::default();
        acc.add(&g);
        assert_eq!(acc.loop_mass(), 5);
        assert_eq!(acc.into_graph().edge_count(), 0);
    }

    #[test]
    fn stats_of_events() {
        let s = event_stats(&trace("E", &[&["UK", "US"], &["FR"]]));
        assert_eq!(s.initial_spreaders, set(&["UK", "US"]));
        assert_eq!(s.virality, 3);
        let s = event_stats(&trace("E", &[&["XX"]]));
        assert_eq!((s.initial_spreaders.len(), s.virality), (1, 1));
    }

    #[test]
    fn spreader_scores_count_initial_membership() {
        let universe = set(&["FR", "UK", "US"]);
        assert!(spreader_scores([], &universe).values().all(|&v| v == 0));
        let stats = [
            event_stats(&trace("E1", &[&["UK", "US"], &["FR"]])),
            event_stats(&trace("E2", &[&["US"], &["UK"]])),
            event_stats(&trace("E3", &[&["FR", "US"]])),
        ];
        let scores = spreader_scores(&stats, &universe);
        let got: Vec<_> = scores.iter().map(|(c, &n)| (c.as_str(), n)).collect();
        assert_eq!(got, vec![("FR", 1), ("UK", 1), ("US", 3)]);
    }

    #[test]
    fn virality_histogram() {
        let mk = |v| EventStats { event_id: "e".into(), initial_spreaders: set(&["UK"]), virality: v };
        let hist = virality_distribution(&[mk(1), mk(1), mk(3)]);
        assert_eq!(hist.into_iter().collect::<Vec<_>>(), vec![(1, 2), (3, 1)]);
        assert!(virality_distribution(&[]).is_empty());
    }

    #[test]
    fn event_stats_file_round_trips() {
        let stats = vec![
            event_stats(&trace("E1", &[&["UK", "US"], &["FR"]])),
            event_stats(&trace("E2", &[&["US"]])),
        ];
        let mut buf = Vec::new();
        write_event_stats(&stats, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).contains("E1\t3\tUK+US\n"));
        assert_eq!(read_event_stats(&buf[..]).unwrap(), stats);
    }

    fn reference(traces: &[EventTrace]) -> (DiffusionGraph, u64) {
        let mut acc = EdgeAccumulator::default();
        for t in traces {
            acc.add(&event_graph(t));
        }
        let loops = acc.loop_mass();
        (acc.into_graph(), loops)
    }

    #[test]
    fn wide_universe_uses_sparse_counts() {
        let many: Vec<String> = (0..DENSE_LIMIT + 50).map(|i| format!("C{i:05}")).collect();
        let many: Vec<&str> = many.iter().map(String::as_str).collect();
        let traces = vec![trace("A", &[&many, &["C00007"], &["C00003", "C00007"]])];
        let (g, loops) = build_network(&traces);
        assert_eq!((g, loops), reference(&traces));
        assert_eq!(loops, 2);
    }

    proptest::proptest! {
        #[test]
        fn indexed_build_matches_event_graph_overlay(
            raw in proptest::collection::vec(
                proptest::collection::vec(proptest::collection::btree_set(0u8..6, 1..4), 1..6),
                0..12,
            )
        ) {
            let names = ["AA", "BB", "CC", "DD", "EE", "FF"];
            let traces: Vec<EventTrace> = raw
                .iter()
                .enumerate()
                .map(|(k, buckets)| {
                    let buckets = buckets
                        .iter()
                        .enumerate()
                        .map(|(t, s)| (t as u64 * 2, s.iter().map(|&c| Country::from(names[c as usize])).collect()))
                        .collect();
                    EventTrace::new(format!("E{k}"), buckets).unwrap()
                })
                .collect();
            proptest::prop_assert_eq!(build_network(&traces), reference(&traces));
        }
    }
}
