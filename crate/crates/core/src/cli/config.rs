use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ingest::{AnalysisWindow, MentionFormat, SourceFormat};
use crate::measures::{DensityNodes, HitsConfig, StrengthBins, StrengthKind};
use crate::richclub::{Richness, DEFAULT_SWAPS_PER_EDGE};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub mentions: Option<PathBuf>,
    pub source_country: Option<PathBuf>,
    /// Optional closed list of valid country codes, one per line.
    pub country_codes: Option<PathBuf>,
    pub covariates: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Window {
    /// `YYYYMMDDHHMMSS`, inclusive.
    pub start: String,
    /// `YYYYMMDDHHMMSS`, exclusive.
    pub end: String,
}

impl Default for Window {
    fn default() -> Self {
        Window {
            start: "20220101000000".into(),
            end: "20230101000000".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasuresConfig {
    pub hits_tolerance: f64,
    pub hits_max_iterations: usize,
    /// Strength used to bin clustering coefficients.
    pub strength: StrengthKind,
    pub bin_base: f64,
    pub bins_per_decade: u32,
    /// Nodes shown in the inverse-weight distance matrix.
    pub top_n: usize,
    pub density_nodes: DensityNodes,
}

impl Default for MeasuresConfig {
    fn default() -> Self {
        let hits = HitsConfig::default();
        let bins = StrengthBins::default();
        MeasuresConfig {
            hits_tolerance: hits.tolerance,
            hits_max_iterations: hits.max_iterations,
            strength: StrengthKind::Total,
            bin_base: bins.base,
            bins_per_decade: bins.per_decade,
            top_n: 40,
            density_nodes: DensityNodes::All,
        }
    }
}

impl MeasuresConfig {
    pub fn hits(&self) -> HitsConfig {
        HitsConfig {
            tolerance: self.hits_tolerance,
            max_iterations: self.hits_max_iterations,
        }
    }

    pub fn bins(&self) -> StrengthBins {
        StrengthBins {
            base: self.bin_base,
            per_decade: self.bins_per_decade,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RichClubConfig {
    pub n_null: usize,
    pub swaps_per_edge: u32,
    /// Club ranking for the weighted coefficient.
    pub richness: Richness,
    /// Size of the reported top club.
    pub top_club: usize,
}

impl Default for RichClubConfig {
    fn default() -> Self {
        RichClubConfig {
            n_null: 100,
            swaps_per_edge: DEFAULT_SWAPS_PER_EDGE,
            richness: Richness::TotalStrength,
            top_club: 8,
        }
    }
}

/// Everything a run depends on. Loaded from TOML; command-line flags
/// override individual keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 means one per core.
    pub threads: usize,
    pub inputs: Inputs,
    pub window: Window,
    pub mentions_format: MentionFormat,
    pub source_format: SourceFormat,
    pub measures: MeasuresConfig,
    pub richclub: RichClubConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            output_dir: PathBuf::from("out"),
            seed: 42,
            threads: 0,
            inputs: Inputs::default(),
            window: Window::default(),
            mentions_format: MentionFormat::default(),
            source_format: SourceFormat::default(),
            measures: MeasuresConfig::default(),
            richclub: RichClubConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML file. Relative input and output paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.output_dir);
        for p in [
            &mut cfg.inputs.mentions,
            &mut cfg.inputs.source_country,
            &mut cfg.inputs.country_codes,
            &mut cfg.inputs.covariates,
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn window(&self) -> Result<AnalysisWindow> {
        AnalysisWindow::new(&self.window.start, &self.window.end)
    }

    /// Checks the window, numeric settings, and that every configured input
    /// file exists.
    pub fn validate(&self) -> Result<()> {
        self.window()?;
        for p in [
            &self.inputs.mentions,
            &self.inputs.source_country,
            &self.inputs.country_codes,
            &self.inputs.covariates,
        ]
        .into_iter()
        .flatten()
        {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        let m = &self.measures;
        if m.hits_tolerance.is_nan() || m.hits_tolerance <= 0.0 {
            return Err(Error::Config("measures.hits_tolerance must be positive".into()));
        }
        if m.hits_max_iterations == 0 {
            return Err(Error::Config("measures.hits_max_iterations must be at least 1".into()));
        }
        if m.bin_base.is_nan() || m.bin_base <= 1.0 || m.bins_per_decade == 0 {
            return Err(Error::Config("strength bins need base > 1 and at least one bin per decade".into()));
        }
        if self.richclub.n_null == 0 {
            return Err(Error::Config("richclub.n_null must be at least 1".into()));
        }
        Ok(())
    }

    pub fn require_input<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::Config(format!("inputs.{key} is not set")))
    }

    /// Short SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&canonical)[..8])
    }
}
