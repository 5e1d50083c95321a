//! Gravity model of news flow:
//!
//! ```text
//! logit(p_ij) = b0 + b1 ln GDP_i + b2 ln GDP_j + b3 ln d_ij + b4 C_ij + b5 L_ij + b6 S_ij
//! ```
//!
//! fitted by OLS with standard errors clustered on the unordered country pair.

mod covariates;
mod ols;

pub use covariates::{load_covariates, CovariateLoadReport, CovariateTable, PairCovariates, COVARIATE_COLUMNS};
pub use ols::{cluster_robust, conventional_standard_errors, ols, ClusterInference, OlsFit};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::artifact::fmt_f64;
use crate::measures::transition_probabilities;
use crate::{Country, DiffusionGraph, Result};

pub const TERMS: [&str; 7] = ["(Intercept)", "log GDP_i", "log GDP_j", "log d_ij", "C_ij", "L_ij", "S_ij"];

/// One directed country pair of the regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravityObservation {
    pub origin: Country,
    pub destination: Country,
    pub p: f64,
    pub logit_p: f64,
    pub log_gdp_i: f64,
    pub log_gdp_j: f64,
    /// Natural log of the geographic distance in km.
    pub log_dist: f64,
    pub contiguity: bool,
    pub common_language: bool,
    pub spoken_language: bool,
}

impl GravityObservation {
    /// The unordered pair `{origin, destination}`.
    pub fn cluster(&self) -> (Country, Country) {
        if self.origin <= self.destination {
            (self.origin.clone(), self.destination.clone())
        } else {
            (self.destination.clone(), self.origin.clone())
        }
    }

    pub fn regressors(&self) -> [f64; 7] {
        let d = |b: bool| if b { 1.0 } else { 0.0 };
        [
            1.0,
            self.log_gdp_i,
            self.log_gdp_j,
            self.log_dist,
            d(self.contiguity),
            d(self.common_language),
            d(self.spoken_language),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub graph_nodes: usize,
    pub graph_edges: usize,
    /// Graph nodes without a GDP value.
    pub nodes_missing_covariates: Vec<Country>,
    pub edges_dropped_missing_node: usize,
    pub edges_dropped_missing_pair: usize,
    /// Edges with `p_ij = 1` (sole out-edge), where the logit is undefined.
    pub edges_dropped_unit_probability: usize,
    pub nodes_retained: usize,
    pub edges_retained: usize,
}

/// One observation per edge whose endpoints both have GDP and whose pair has
/// covariates. Transition probabilities come from the full graph, before any
/// node is dropped.
pub fn build_observations(g: &DiffusionGraph, cov: &CovariateTable) -> (Vec<GravityObservation>, BuildReport) {
    let p = transition_probabilities(g);
    let gdp: Vec<Option<f64>> = g.nodes().iter().map(|c| cov.gdp(c)).collect();
    let mut report = BuildReport {
        graph_nodes: g.node_count(),
        graph_edges: g.edge_count(),
        nodes_missing_covariates: g
            .nodes()
            .iter()
            .zip(&gdp)
            .filter(|(_, v)| v.is_none())
            .map(|(c, _)| c.clone())
            .collect(),
        ..Default::default()
    };
    let mut obs = Vec::new();
    let mut retained = BTreeSet::new();
    for (i, j, _) in g.edges() {
        let (Some(gdp_i), Some(gdp_j)) = (gdp[i], gdp[j]) else {
            report.edges_dropped_missing_node += 1;
            continue;
        };
        let (origin, destination) = (g.node(i), g.node(j));
        let Some(pair) = cov.pair(origin, destination) else {
            report.edges_dropped_missing_pair += 1;
            continue;
        };
        let pij = p.get(i, j);
        if pij >= 1.0 {
            report.edges_dropped_unit_probability += 1;
            continue;
        }
        retained.insert(i);
        retained.insert(j);
        obs.push(GravityObservation {
            origin: origin.clone(),
            destination: destination.clone(),
            p: pij,
            logit_p: (pij / (1.0 - pij)).ln(),
            log_gdp_i: gdp_i.ln(),
            log_gdp_j: gdp_j.ln(),
            log_dist: pair.distance_km.ln(),
            contiguity: pair.contiguity,
            common_language: pair.common_language,
            spoken_language: pair.spoken_language,
        });
    }
    report.nodes_retained = retained.len();
    report.edges_retained = obs.len();
    (obs, report)
}

pub fn design(obs: &[GravityObservation]) -> (DMatrix<f64>, DVector<f64>) {
    let x = DMatrix::from_fn(obs.len(), TERMS.len(), |r, c| obs[r].regressors()[c]);
    let y = DVector::from_iterator(obs.len(), obs.iter().map(|o| o.logit_p));
    (x, y)
}

/// Cluster index per observation, numbering unordered pairs in sorted order.
pub fn cluster_ids(obs: &[GravityObservation]) -> Vec<usize> {
    let keys: BTreeMap<(Country, Country), usize> = obs
        .iter()
        .map(|o| o.cluster())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    obs.iter().map(|o| keys[&o.cluster()]).collect()
}

pub fn fit_ols(obs: &[GravityObservation]) -> Result<OlsFit> {
    let (x, y) = design(obs);
    ols(&x, &y, &TERMS)
}

/// Completed fit: estimates with pair-clustered inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravityFit {
    pub terms: Vec<String>,
    pub estimates: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub df: usize,
    pub small_sample_factor: f64,
    pub critical_value: f64,
    pub reference_distribution: String,
    pub cluster_variable: String,
}

pub fn cluster_robust_se(fit: &OlsFit, obs: &[GravityObservation]) -> Result<GravityFit> {
    let (x, _) = design(obs);
    let inf = cluster_robust(fit, &x, &cluster_ids(obs))?;
    Ok(GravityFit {
        terms: fit.terms.clone(),
        estimates: fit.coefficients.iter().copied().collect(),
        standard_errors: inf.standard_errors,
        t_values: inf.t_values,
        p_values: inf.p_values,
        ci_lower: inf.ci_lower,
        ci_upper: inf.ci_upper,
        r_squared: fit.r_squared,
        n_obs: fit.n_obs(),
        n_clusters: inf.n_clusters,
        df: inf.df,
        small_sample_factor: inf.small_sample_factor,
        critical_value: inf.critical_value,
        reference_distribution: format!("student_t(df = {})", inf.df),
        cluster_variable: "unordered country pair".into(),
    })
}

pub const TABLE_COLUMNS: [&str; 6] = ["Estimate", "Std. Error", "t value", "Pr(>|t|)", "CI Lower", "CI Upper"];

/// Human-readable coefficient table, two decimals.
pub fn report_table(fit: &GravityFit) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<12}", "");
    for c in TABLE_COLUMNS {
        let _ = write!(s, " {c:>10}");
    }
    s.push('\n');
    for (k, term) in fit.terms.iter().enumerate() {
        let _ = write!(s, "{term:<12}");
        for v in [
            fit.estimates[k],
            fit.standard_errors[k],
            fit.t_values[k],
            fit.p_values[k],
            fit.ci_lower[k],
            fit.ci_upper[k],
        ] {
            let _ = write!(s, " {v:>10.2}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "R^2 = {:.2}, n_obs = {}, n_clusters = {}", fit.r_squared, fit.n_obs, fit.n_clusters);
    s
}

pub const OBSERVATION_HEADER: [&str; 11] = [
    "origin",
    "destination",
    "p",
    "logit_p",
    "log_gdp_i",
    "log_gdp_j",
    "log_dist",
    "contig",
    "comlang_off",
    "comlang_ethno",
    "cluster",
];

pub fn write_observations(obs: &[GravityObservation], w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "{}", OBSERVATION_HEADER.join("\t"))?;
    for o in obs {
        let (a, b) = o.cluster();
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{a}-{b}",
            o.origin,
            o.destination,
            fmt_f64(o.p),
            fmt_f64(o.logit_p),
            fmt_f64(o.log_gdp_i),
            fmt_f64(o.log_gdp_j),
            fmt_f64(o.log_dist),
            u8::from(o.contiguity),
            u8::from(o.common_language),
            u8::from(o.spoken_language),
        )?;
    }
    Ok(())
}
