use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::{Country, Error, Result};

pub const COVARIATE_COLUMNS: [&str; 8] = [
    "iso_i",
    "iso_j",
    "dist_km",
    "contig",
    "comlang_off",
    "comlang_ethno",
    "gdp_i_billions",
    "gdp_j_billions",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCovariates {
    pub distance_km: f64,
    pub contiguity: bool,
    /// Common official language.
    pub common_language: bool,
    /// A language spoken by at least 9% of both populations.
    pub spoken_language: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovariateLoadReport {
    pub rows: u64,
    pub rows_rejected: u64,
    /// Pair rows whose unordered pair was already seen (first row kept).
    pub duplicate_pairs: u64,
    /// GDP values that disagree with an earlier value for the same country.
    pub conflicting_gdp: u64,
}

/// Country GDP (billions of US dollars) and symmetric pair covariates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CovariateTable {
    gdp: BTreeMap<Country, f64>,
    pairs: HashMap<(Country, Country), PairCovariates>,
}

fn unordered(a: &Country, b: &Country) -> (Country, Country) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

impl CovariateTable {
    pub fn insert_gdp(&mut self, country: Country, gdp_billions: f64) {
        self.gdp.entry(country).or_insert(gdp_billions);
    }

    pub fn insert_pair(&mut self, a: &Country, b: &Country, cov: PairCovariates) {
        self.pairs.entry(unordered(a, b)).or_insert(cov);
    }

    pub fn gdp(&self, country: &Country) -> Option<f64> {
        self.gdp.get(country).copied()
    }

    /// Looked up without regard to direction.
    pub fn pair(&self, a: &Country, b: &Country) -> Option<&PairCovariates> {
        self.pairs.get(&unordered(a, b))
    }

    pub fn country_count(&self) -> usize {
        self.gdp.len()
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }
}

fn parse_dummy(s: &str) -> Option<bool> {
    match s.trim() {
        "0" | "0.0" => Some(false),
        "1" | "1.0" => Some(true),
        _ => None,
    }
}

fn parse_positive(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite() && *x > 0.0)
}

/// Reads a covariate file with the named columns of [`COVARIATE_COLUMNS`]
/// (any order, extra columns ignored). Tab- or comma-delimited, detected from
/// the header. GDP cells may be empty; a row with a bad distance or dummy is
/// rejected and counted.
pub fn load_covariates(mut reader: impl Read) -> Result<(CovariateTable, CovariateLoadReport)> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let header = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .ok_or_else(|| Error::EmptyInput("covariate file is empty".into()))?;
    let delimiter = if header.contains('\t') { b'\t' } else { b',' };
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let names = csv.headers().map_err(|e| Error::Malformed(e.to_string()))?.clone();
    let mut col = [0usize; 8];
    for (slot, want) in col.iter_mut().zip(COVARIATE_COLUMNS) {
        *slot = names
            .iter()
            .position(|h| h.trim() == want)
            .ok_or_else(|| Error::Malformed(format!("covariate file lacks column `{want}`")))?;
    }

    let mut table = CovariateTable::default();
    let mut report = CovariateLoadReport::default();
    for record in csv.records() {
        let record = record.map_err(|e| Error::Malformed(e.to_string()))?;
        report.rows += 1;
        let field = |k: usize| record.get(col[k]).unwrap_or("");
        let (Some(a), Some(b)) = (Country::parse(field(0)), Country::parse(field(1))) else {
            report.rows_rejected += 1;
            continue;
        };
        for (country, raw) in [(&a, field(6)), (&b, field(7))] {
            if raw.trim().is_empty() {
                continue;
            }
            match parse_positive(raw) {
                Some(g) => match table.gdp(country) {
                    Some(prev) if prev != g => report.conflicting_gdp += 1,
                    Some(_) => {}
                    None => table.insert_gdp(country.clone(), g),
                },
                None => report.rows_rejected += 1,
            }
        }
        if a == b {
            continue;
        }
        let pair = (|| {
            Some(PairCovariates {
                distance_km: parse_positive(field(2))?,
                contiguity: parse_dummy(field(3))?,
                common_language: parse_dummy(field(4))?,
                spoken_language: parse_dummy(field(5))?,
            })
        })();
        match pair {
            Some(_) if table.pair(&a, &b).is_some() => report.duplicate_pairs += 1,
            Some(cov) => table.insert_pair(&a, &b, cov),
            None => report.rows_rejected += 1,
        }
    }
    if report.rows == 0 {
        return Err(Error::EmptyInput("covariate file has no data rows".into()));
    }
    Ok((table, report))
}
