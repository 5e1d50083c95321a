use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::PipelineConfig;
use crate::artifact::{fmt_f64, fmt_opt, write_atomic, Metadata};
use crate::gravity::{self, load_covariates};
use crate::ingest::{self, load_source_country};
use crate::measures::{self, ClusteringMode};
use crate::netbuild::{self, build_network};
use crate::richclub::{self, RichClubMode, RichClubOptions};
use crate::{Country, DiffusionGraph, Error, Result};

/// Artifact file names inside the output directory.
pub mod files {
    pub const GRAPH_EDGES: &str = "graph_edges.tsv";
    pub const GRAPH_NODES: &str = "graph_nodes.tsv";
    pub const EVENT_STATS: &str = "event_stats.tsv";
    pub const SPREADER_SCORES: &str = "spreader_scores.tsv";
    pub const VIRALITY: &str = "virality_distribution.tsv";
    pub const COUNTRY_ACTIVITY: &str = "country_activity.tsv";
    pub const INGEST_STATS_JSON: &str = "ingest_stats.json";
    pub const INGEST_STATS_TXT: &str = "ingest_stats.txt";

    pub const NODE_MEASURES: &str = "node_measures.tsv";
    pub const CLUSTERING_BY_STRENGTH: &str = "clustering_by_strength.tsv";
    pub const TRANSITIONS: &str = "transition_probabilities.tsv";
    pub const MUTUAL_EDGES: &str = "mutual_edges.tsv";
    pub const DISTANCES: &str = "distance_matrix.tsv";
    pub const MEASURES_JSON: &str = "measures.json";

    pub const RICHCLUB_TOPOLOGICAL: &str = "richclub_topological.tsv";
    pub const RICHCLUB_WEIGHTED: &str = "richclub_weighted.tsv";
    pub const RICHCLUB_JSON: &str = "richclub.json";

    pub const GRAVITY_OBSERVATIONS: &str = "gravity_observations.tsv";
    pub const GRAVITY_TABLE: &str = "gravity_table.txt";
    pub const GRAVITY_JSON: &str = "gravity_fit.json";

    pub const SUMMARY_JSON: &str = "summary.json";
    pub const SUMMARY_TXT: &str = "summary.txt";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Build,
    Measures,
    RichClub,
    Gravity,
    Report,
    /// Every stage in order; gravity is skipped when no covariate file is configured.
    All,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Build => "build",
            Stage::Measures => "measures",
            Stage::RichClub => "richclub",
            Stage::Gravity => "gravity",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    dir: &'a Path,
    hash: String,
    written: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn meta(&self) -> Metadata {
        Metadata::new(&self.hash, self.cfg.seed)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn require(&self, name: &str, stage: &'static str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact { path: p, run_first: stage })
        }
    }

    fn write(&mut self, name: &str, meta: &Metadata, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let path = self.path(name);
        write_atomic(&path, |w| {
            meta.write(w)?;
            body(w)
        })?;
        info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    fn write_json(&mut self, name: &str, meta: &Metadata, body: impl Serialize) -> Result<()> {
        let mut value = serde_json::to_value(body).map_err(|e| Error::Malformed(e.to_string()))?;
        if let Value::Object(map) = &mut value {
            map.insert("metadata".into(), json!(meta.to_map()));
        }
        let path = self.path(name);
        write_atomic(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, &value)?;
            writeln!(w)
        })?;
        info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    fn read_json(&self, name: &str, stage: &'static str) -> Result<Value> {
        let path = self.require(name, stage)?;
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
    }

    fn load_graph(&self) -> Result<DiffusionGraph> {
        let open = |name| -> Result<BufReader<File>> {
            let p = self.require(name, "build")?;
            Ok(BufReader::new(File::open(&p).map_err(|e| Error::io(&p, e))?))
        };
        DiffusionGraph::read(open(files::GRAPH_EDGES)?, open(files::GRAPH_NODES)?)
    }
}

/// Runs `stage` on the global rayon pool. Returns the artifacts written.
pub fn run(stage: Stage, cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let mut ctx = Ctx {
        cfg,
        dir: &cfg.output_dir,
        hash: cfg.hash(),
        written: Vec::new(),
    };
    match stage {
        Stage::Build => build(&mut ctx)?,
        Stage::Measures => measures_stage(&mut ctx)?,
        Stage::RichClub => richclub_stage(&mut ctx)?,
        Stage::Gravity => gravity_stage(&mut ctx)?,
        Stage::Report => report(&mut ctx)?,
        Stage::All => {
            build(&mut ctx)?;
            measures_stage(&mut ctx)?;
            richclub_stage(&mut ctx)?;
            if cfg.inputs.covariates.is_some() {
                gravity_stage(&mut ctx)?;
            } else {
                warn!("inputs.covariates not set; skipping gravity");
            }
            report(&mut ctx)?;
        }
    }
    Ok(ctx.written)
}

/// Runs `stage` inside a dedicated pool of `cfg.threads` workers.
pub fn run_with_threads(stage: Stage, cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run(stage, cfg))
}

/// Serialized name of a unit enum variant.
fn label(value: impl Serialize) -> String {
    match serde_json::to_value(value) {
        Ok(Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

fn read_codes(path: &Path) -> Result<BTreeSet<Country>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut codes = BTreeSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let code = Country::parse(line).ok_or_else(|| Error::Malformed(format!("bad country code {line:?} in {}", path.display())))?;
        codes.insert(code);
    }
    Ok(codes)
}

fn build(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let source_path = cfg.require_input(&cfg.inputs.source_country, "source_country")?;
    let mentions_path = cfg.require_input(&cfg.inputs.mentions, "mentions")?;
    let codes = cfg.inputs.country_codes.as_deref().map(read_codes).transpose()?;

    let (map, source_stats) = load_source_country(ingest::open_input(source_path)?, &cfg.source_format, codes.as_ref())?;
    info!("source-country map: {} domains, {} codes", map.len(), map.codes().len());
    let (traces, mut stats, activity) =
        ingest::ingest_stream(ingest::open_input(mentions_path)?, &cfg.mentions_format, cfg.window()?, &map)?;
    stats.merge(&source_stats);
    info!(
        "ingested {} rows: {} records, {} rejected, {} events",
        stats.rows_read,
        stats.records_emitted,
        stats.rejected_total(),
        stats.events_emitted
    );

    let (graph, loop_mass) = build_network(&traces);
    let event_stats: Vec<_> = traces.par_iter().map(netbuild::event_stats).collect();
    drop(traces);
    let scores = netbuild::spreader_scores(&event_stats, graph.nodes());
    let virality = netbuild::virality_distribution(&event_stats);
    info!("network: {} nodes, {} edges, loop mass {}", graph.node_count(), graph.edge_count(), loop_mass);

    let meta = ctx
        .meta()
        .with("window", format!("[{}, {})", cfg.window.start, cfg.window.end))
        .with("window_policy", "truncate: mentions outside the window are rejected, events keep their in-window buckets");
    let graph_meta = meta.clone().with("loop_mass_removed", loop_mass);
    ctx.write(files::GRAPH_EDGES, &graph_meta, |w| graph.write_edge_list(w))?;
    ctx.write(files::GRAPH_NODES, &graph_meta, |w| graph.write_node_list(w))?;
    ctx.write(files::EVENT_STATS, &meta, |w| netbuild::write_event_stats(&event_stats, w))?;
    ctx.write(files::SPREADER_SCORES, &meta, |w| {
        writeln!(w, "country\tspreader_score")?;
        for (c, n) in &scores {
            writeln!(w, "{c}\t{n}")?;
        }
        Ok(())
    })?;
    ctx.write(files::VIRALITY, &meta, |w| {
        writeln!(w, "virality\tevents")?;
        for (v, n) in &virality {
            writeln!(w, "{v}\t{n}")?;
        }
        Ok(())
    })?;
    ctx.write(files::COUNTRY_ACTIVITY, &meta, |w| {
        writeln!(w, "country\toutlets\tarticles")?;
        for a in &activity {
            writeln!(w, "{}\t{}\t{}", a.country, a.outlets, a.articles)?;
        }
        Ok(())
    })?;
    let counts: serde_json::Map<String, Value> = stats.counts().into_iter().map(|(k, v)| (k, json!(v))).collect();
    ctx.write_json(
        files::INGEST_STATS_JSON,
        &meta,
        json!({
            "counts": counts,
            "graph": { "nodes": graph.node_count(), "edges": graph.edge_count(), "total_weight": graph.total_weight(), "loop_mass_removed": loop_mass },
        }),
    )?;
    ctx.write(files::INGEST_STATS_TXT, &meta, |w| write!(w, "{stats}"))?;
    Ok(())
}

fn measures_stage(ctx: &mut Ctx) -> Result<()> {
    let cfg = &ctx.cfg.measures;
    let g = ctx.load_graph()?;
    let n = g.node_count();
    let profiles = measures::node_profiles(&g);
    let density = measures::density(&g, cfg.density_nodes).ok();
    let reciprocity = measures::reciprocity(&g).ok();
    let correlation = measures::degree_correlation(&profiles).ok();
    let unweighted = measures::clustering(&g, ClusteringMode::Unweighted);
    let weighted = measures::clustering(&g, ClusteringMode::Weighted);
    let gamma = measures::disparity(&g);
    let hits = match measures::hits(&g, cfg.hits()) {
        Ok(h) => Some(h),
        Err(e) => {
            warn!("HITS skipped: {e}");
            None
        }
    };
    if let Some(h) = hits.as_ref().filter(|h| !h.converged) {
        warn!("HITS did not converge within {} iterations", h.iterations);
    }
    let binned = measures::clustering_by_strength(&g, &unweighted, &weighted, cfg.strength, cfg.bins());
    let transitions = measures::transition_probabilities(&g);
    let mutual = measures::mutual_edge_pairs(&g);
    let distances = measures::inverse_weight_distances(&g, cfg.top_n);

    let meta = ctx
        .meta()
        .with("clustering_weight_normalization", format!("w / max(w), max(w) = {}", weighted.weight_scale))
        .with("clustering_degenerate_value", "0 where fewer than two distinct neighbours");
    ctx.write(files::NODE_MEASURES, &meta, |w| {
        writeln!(
            w,
            "country\tin_degree\tout_degree\tin_strength\tout_strength\tC\tC_w\tgamma\tauthority\thub\tbilateral_strength\tclustering_degenerate"
        )?;
        for (i, p) in profiles.iter().enumerate() {
            let (auth, hub) = hits.as_ref().map_or((f64::NAN, f64::NAN), |h| (h.authority[i], h.hub[i]));
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                p.country,
                p.in_degree,
                p.out_degree,
                p.in_strength,
                p.out_strength,
                fmt_f64(unweighted.values[i]),
                fmt_f64(weighted.values[i]),
                fmt_opt(gamma[i]),
                fmt_f64(auth),
                fmt_f64(hub),
                fmt_f64(p.bilateral_strength),
                u8::from(unweighted.degenerate[i]),
            )?;
        }
        Ok(())
    })?;
    let bin_meta = meta
        .clone()
        .with("strength", label(cfg.strength))
        .with("bins", format!("log base {} with {} bins per decade", cfg.bin_base, cfg.bins_per_decade));
    ctx.write(files::CLUSTERING_BY_STRENGTH, &bin_meta, |w| {
        writeln!(w, "strength_lower\tstrength_upper\tstrength_center\tnodes\tC\tC_w")?;
        for b in &binned {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}",
                fmt_f64(b.lower),
                fmt_f64(b.upper),
                fmt_f64(b.center),
                b.count,
                fmt_f64(b.unweighted_mean),
                fmt_f64(b.weighted_mean)
            )?;
        }
        Ok(())
    })?;
    ctx.write(files::TRANSITIONS, &meta, |w| {
        writeln!(w, "src\tdst\tp")?;
        for i in 0..n {
            for &(j, p) in transitions.row(i).unwrap_or(&[]) {
                writeln!(w, "{}\t{}\t{}", g.node(i), g.node(j), fmt_f64(p))?;
            }
        }
        Ok(())
    })?;
    ctx.write(files::MUTUAL_EDGES, &meta, |w| {
        writeln!(w, "country_i\tcountry_j\tp_ij\tp_ji")?;
        for m in &mutual {
            writeln!(w, "{}\t{}\t{}\t{}", g.node(m.i), g.node(m.j), fmt_f64(m.p_ij), fmt_f64(m.p_ji))?;
        }
        Ok(())
    })?;
    let dist_meta = meta.clone().with("edge_length", "1 / w_ij").with("order", "out-strength descending");
    ctx.write(files::DISTANCES, &dist_meta, |w| {
        let names: Vec<&str> = distances.order.iter().map(|&i| g.node(i).as_str()).collect();
        writeln!(w, "country\t{}", names.join("\t"))?;
        for (row, name) in distances.dist.iter().zip(&names) {
            let cells: Vec<String> = row.iter().map(|&d| fmt_f64(d)).collect();
            writeln!(w, "{name}\t{}", cells.join("\t"))?;
        }
        Ok(())
    })?;

    let top = |v: &[f64]| {
        (0..n)
            .max_by(|&a, &b| v[a].total_cmp(&v[b]).then(b.cmp(&a)))
            .map(|i| g.node(i).to_string())
    };
    ctx.write_json(
        files::MEASURES_JSON,
        &meta,
        json!({
            "nodes": n,
            "edge_bearing_nodes": g.edge_bearing_node_count(),
            "edges": g.edge_count(),
            "total_weight": g.total_weight(),
            "density": density,
            "density_nodes": cfg.density_nodes,
            "reciprocity": reciprocity,
            "degree_correlation": correlation,
            "hits": hits.as_ref().map(|h| json!({
                "iterations": h.iterations,
                "converged": h.converged,
                "tolerance": cfg.hits_tolerance,
                "max_iterations": cfg.hits_max_iterations,
                "top_hub": top(&h.hub),
                "top_authority": top(&h.authority),
            })),
            "clustering": {
                "weight_scale": weighted.weight_scale,
                "strength": cfg.strength,
                "degenerate_nodes": unweighted.degenerate.iter().filter(|&&d| d).count(),
            },
            "mutual_pairs": mutual.len(),
            "distance_top_n": distances.order.len(),
        }),
    )?;
    Ok(())
}

fn write_curve(w: &mut dyn Write, curve: &richclub::RichClubCurve) -> std::io::Result<()> {
    writeln!(w, "threshold\traw\tnull_mean\tnull_sd\tnormalized\tp_estimate\tclub_size\traw_directed")?;
    for p in &curve.points {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.threshold,
            fmt_opt(p.raw),
            fmt_opt(p.null_mean),
            fmt_opt(p.null_sd),
            fmt_opt(p.normalized),
            fmt_opt(p.p_estimate),
            p.club_size,
            fmt_opt(p.raw_directed),
        )?;
    }
    Ok(())
}

fn richclub_stage(ctx: &mut Ctx) -> Result<()> {
    let cfg = &ctx.cfg.richclub;
    let g = ctx.load_graph()?;
    let options = RichClubOptions {
        n_null: cfg.n_null,
        seed: ctx.cfg.seed,
        richness: cfg.richness,
        swaps_per_edge: cfg.swaps_per_edge,
    };
    let topo = richclub::normalized_rc(&g, RichClubMode::Topological, &options);
    let weighted = richclub::normalized_rc(&g, RichClubMode::Weighted, &options);
    let club: Vec<String> = richclub::top_club(&g, cfg.richness, cfg.top_club)
        .into_iter()
        .map(|i| g.node(i).to_string())
        .collect();

    let meta = ctx
        .meta()
        .with("n_null", cfg.n_null)
        .with("instance_seeds", "derive(seed, instance index)");
    let topo_meta = meta
        .clone()
        .with("mode", "topological")
        .with("richness", "total degree")
        .with("null_model", format!("directed double-edge swaps, {} attempts per edge", cfg.swaps_per_edge))
        .with("raw_convention", "2 m / (n (n - 1)) with directed m; raw_directed = m / (n (n - 1))");
    ctx.write(files::RICHCLUB_TOPOLOGICAL, &topo_meta, |w| write_curve(w, &topo))?;
    let weighted_meta = meta
        .clone()
        .with("mode", "weighted")
        .with("richness", label(cfg.richness))
        .with("null_model", "per-node reshuffle of out-edge weights");
    ctx.write(files::RICHCLUB_WEIGHTED, &weighted_meta, |w| write_curve(w, &weighted))?;

    let peak = |c: &richclub::RichClubCurve| {
        c.points
            .iter()
            .filter_map(|p| p.normalized.map(|r| (p.threshold, r)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(t, r)| json!({ "threshold": t, "normalized": r }))
    };
    ctx.write_json(
        files::RICHCLUB_JSON,
        &meta,
        json!({
            "n_null": cfg.n_null,
            "swaps_per_edge": cfg.swaps_per_edge,
            "richness": cfg.richness,
            "top_club": club,
            "topological_peak": peak(&topo),
            "weighted_peak": peak(&weighted),
            "thresholds": { "topological": topo.points.len(), "weighted": weighted.points.len() },
        }),
    )?;
    Ok(())
}

fn gravity_stage(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let g = ctx.load_graph()?;
    let cov_path = cfg.require_input(&cfg.inputs.covariates, "covariates")?;
    let (table, cov_report) = load_covariates(ingest::open_input(cov_path)?)?;
    let (obs, build_report) = gravity::build_observations(&g, &table);
    info!(
        "gravity dataset: {} nodes, {} edges ({} dropped with p = 1)",
        build_report.nodes_retained, build_report.edges_retained, build_report.edges_dropped_unit_probability
    );
    let ols = gravity::fit_ols(&obs)?;
    let fit = gravity::cluster_robust_se(&ols, &obs)?;

    let meta = ctx
        .meta()
        .with("logarithm", "natural")
        .with("cluster_variable", &fit.cluster_variable)
        .with("reference_distribution", &fit.reference_distribution)
        .with("small_sample_factor", fmt_f64(fit.small_sample_factor))
        .with("unit_probability_rows", "excluded");
    ctx.write(files::GRAVITY_OBSERVATIONS, &meta, |w| gravity::write_observations(&obs, w))?;
    ctx.write(files::GRAVITY_TABLE, &meta, |w| w.write_all(gravity::report_table(&fit).as_bytes()))?;
    ctx.write_json(
        files::GRAVITY_JSON,
        &meta,
        json!({ "fit": fit, "dataset": build_report, "covariates": cov_report }),
    )?;
    Ok(())
}

fn report(ctx: &mut Ctx) -> Result<()> {
    let ingest = ctx.read_json(files::INGEST_STATS_JSON, "build")?;
    let measures = ctx.read_json(files::MEASURES_JSON, "measures")?;
    let richclub = ctx.read_json(files::RICHCLUB_JSON, "richclub")?;
    let gravity = if ctx.cfg.inputs.covariates.is_some() {
        Some(ctx.read_json(files::GRAVITY_JSON, "gravity")?)
    } else {
        None
    };
    let summary = json!({
        "ingest": ingest,
        "measures": measures,
        "richclub": richclub,
        "gravity": gravity,
    });

    let mut text = String::new();
    let line = |text: &mut String, k: &str, v: &Value| text.push_str(&format!("{k:<28}{}\n", v));
    line(&mut text, "nodes", &summary["measures"]["nodes"]);
    line(&mut text, "edges", &summary["measures"]["edges"]);
    line(&mut text, "density", &summary["measures"]["density"]);
    line(&mut text, "reciprocity", &summary["measures"]["reciprocity"]);
    line(&mut text, "in/out degree correlation", &summary["measures"]["degree_correlation"]["r"]);
    line(&mut text, "top hub", &summary["measures"]["hits"]["top_hub"]);
    line(&mut text, "top authority", &summary["measures"]["hits"]["top_authority"]);
    line(&mut text, "top club by richness", &summary["richclub"]["top_club"]);
    line(&mut text, "weighted rich-club peak", &summary["richclub"]["weighted_peak"]);
    if gravity.is_some() {
        line(&mut text, "gravity R^2", &summary["gravity"]["fit"]["r_squared"]);
        line(&mut text, "gravity observations", &summary["gravity"]["fit"]["n_obs"]);
    }

    let meta = ctx.meta();
    ctx.write_json(files::SUMMARY_JSON, &meta, summary)?;
    ctx.write(files::SUMMARY_TXT, &meta, |w| w.write_all(text.as_bytes()))?;
    Ok(())
}
