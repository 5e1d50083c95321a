#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub const COUNTRIES: [&str; 12] = ["AR", "BR", "CA", "FR", "GM", "IN", "IT", "JA", "RS", "SP", "UK", "US"];

/// Writes a random but reproducible mentions file, source map and covariate
/// table for `COUNTRIES` into `dir`. Returns a config pointing at them.
pub fn synthetic_dataset(dir: &Path, seed: u64, events: usize) -> newsflow::cli::PipelineConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut sources = String::new();
    for c in COUNTRIES {
        for k in 0..3 {
            writeln!(sources, "news{k}.{}.example\t{c}", c.to_lowercase()).unwrap();
        }
    }

    let base = 1_640_995_200i64; // 2022-01-01T00:00:00Z
    let mut mentions = String::new();
    for e in 0..events {
        let start = base + rng.random_range(0..360) * 86_400 + rng.random_range(0..96) * 900;
        let n = rng.random_range(1..25);
        for _ in 0..n {
            let t = start + rng.random_range(0..12) * 900 + rng.random_range(0..900);
            let ts = chrono::DateTime::from_timestamp(t, 0).unwrap().format("%Y%m%d%H%M%S");
            // Skewed towards the first few countries.
            let c = COUNTRIES[(rng.random::<f64>().powi(2) * COUNTRIES.len() as f64) as usize];
            let k = rng.random_range(0..3);
            writeln!(mentions, "EV{e:05}\t{ts}\thttps://news{k}.{}.example/story/{e}", c.to_lowercase()).unwrap();
        }
    }

    let gdp: Vec<f64> = COUNTRIES.iter().map(|_| rng.random_range(50.0..20_000.0)).collect();
    let mut cov = String::from("iso_i,iso_j,dist_km,contig,comlang_off,comlang_ethno,gdp_i_billions,gdp_j_billions\n");
    for i in 0..COUNTRIES.len() {
        for j in i + 1..COUNTRIES.len() {
            let contig = u8::from(rng.random_bool(0.2));
            let off = u8::from(rng.random_bool(0.3));
            let ethno = off.max(u8::from(rng.random_bool(0.2)));
            writeln!(
                cov,
                "{},{},{:.1},{contig},{off},{ethno},{},{}",
                COUNTRIES[i],
                COUNTRIES[j],
                rng.random_range(300.0..18_000.0),
                gdp[i],
                gdp[j]
            )
            .unwrap();
        }
    }

    std::fs::write(dir.join("mentions.tsv"), mentions).unwrap();
    std::fs::write(dir.join("sources.tsv"), sources).unwrap();
    std::fs::write(dir.join("covariates.csv"), cov).unwrap();

    let mut cfg = newsflow::cli::PipelineConfig {
        output_dir: dir.join("out"),
        seed,
        inputs: newsflow::cli::Inputs {
            mentions: Some(dir.join("mentions.tsv")),
            source_country: Some(dir.join("sources.tsv")),
            country_codes: None,
            covariates: Some(dir.join("covariates.csv")),
        },
        ..Default::default()
    };
    cfg.richclub.n_null = 20;
    cfg
}

pub fn name(i: usize) -> newsflow::Country {
    newsflow::Country::parse(&format!("N{i:03}")).unwrap()
}

pub fn graph(n: usize, edges: &[(usize, usize, u64)]) -> newsflow::DiffusionGraph {
    newsflow::DiffusionGraph::new((0..n).map(name), edges.iter().map(|&(i, j, w)| (name(i), name(j), w))).unwrap()
}

/// Directed G(n, p) with weights uniform in `1..=max_w`.
pub fn random_graph(seed: u64, n: usize, p: f64, max_w: u64) -> newsflow::DiffusionGraph {
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
