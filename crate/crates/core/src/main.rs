use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use newsflow::cli::{run_with_threads, PipelineConfig, Stage};

/// International news-diffusion network pipeline.
#[derive(Parser)]
#[command(name = "newsflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Ingest mentions and build the diffusion network and event statistics.
    Build,
    /// Node and network measures of the built network.
    Measures,
    /// Topological and weighted rich-club curves against null ensembles.
    Richclub,
    /// Fit the gravity model with pair-clustered standard errors.
    Gravity,
    /// Collect every machine-readable output into one summary.
    Report,
    /// Run build, measures, richclub, gravity and report in order.
    All,
}

/// Every flag overrides the matching key of the configuration file.
#[derive(Args)]
struct Overrides {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    mentions: Option<PathBuf>,
    #[arg(long, global = true)]
    source_country: Option<PathBuf>,
    #[arg(long, global = true)]
    country_codes: Option<PathBuf>,
    #[arg(long, global = true)]
    covariates: Option<PathBuf>,
    /// Window start, YYYYMMDDHHMMSS (inclusive).
    #[arg(long, global = true)]
    window_start: Option<String>,
    /// Window end, YYYYMMDDHHMMSS (exclusive).
    #[arg(long, global = true)]
    window_end: Option<String>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    n_null: Option<usize>,
    #[arg(long, global = true)]
    swaps_per_edge: Option<u32>,
    #[arg(long, global = true)]
    top_n: Option<usize>,
    #[arg(long, global = true)]
    hits_tolerance: Option<f64>,
    #[arg(long, global = true)]
    hits_max_iterations: Option<usize>,
    /// Read mentions in the GDELT 2.0 Mentions column layout.
    #[arg(long, global = true)]
    gdelt_layout: bool,
}

impl Overrides {
    fn apply(self, cfg: &mut PipelineConfig) {
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        set!(cfg.inputs.mentions, self.mentions.map(Some));
        set!(cfg.inputs.source_country, self.source_country.map(Some));
        set!(cfg.inputs.country_codes, self.country_codes.map(Some));
        set!(cfg.inputs.covariates, self.covariates.map(Some));
        set!(cfg.window.start, self.window_start);
        set!(cfg.window.end, self.window_end);
        set!(cfg.output_dir, self.output_dir);
        set!(cfg.seed, self.seed);
        set!(cfg.threads, self.threads);
        set!(cfg.richclub.n_null, self.n_null);
        set!(cfg.richclub.swaps_per_edge, self.swaps_per_edge);
        set!(cfg.measures.top_n, self.top_n);
        set!(cfg.measures.hits_tolerance, self.hits_tolerance);
        set!(cfg.measures.hits_max_iterations, self.hits_max_iterations);
        if self.gdelt_layout {
            cfg.mentions_format = newsflow::ingest::MentionFormat::gdelt_mentions();
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let stage = match cli.command {
        Command::Build => Stage::Build,
        Command::Measures => Stage::Measures,
        Command::Richclub => Stage::RichClub,
        Command::Gravity => Stage::Gravity,
        Command::Report => Stage::Report,
        Command::All => Stage::All,
    };
    let mut cfg = match &cli.overrides.config {
        Some(path) => match PipelineConfig::load(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                error!("{e}");
                return ExitCode::FAILURE;
            }
        },
        None => PipelineConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    match run_with_threads(stage, &cfg) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{} failed: {e}", stage.name());
            ExitCode::FAILURE
        }
    }
}
