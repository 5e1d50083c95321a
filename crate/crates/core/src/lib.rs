//! Reconstruction and analysis of international news-diffusion networks.
//!
//! The pipeline reads timestamped event-mention records, resolves each
//! mention to the country of its outlet, links countries that mention the
//! same event in successive 15-minute buckets, and aggregates the per-event
//! graphs into one weighted directed country network. On top of that network
//! it computes degree/strength profiles, weighted directed clustering,
//! disparity, weighted HITS, rich-club coefficients against null ensembles,
//! and a logit gravity model fitted by OLS with cluster-robust errors.

pub mod artifact;
pub mod cli;
pub mod country;
pub mod error;
pub mod graph;
pub mod gravity;
pub mod ingest;
pub mod measures;
pub mod netbuild;
pub mod richclub;
pub mod seed;

pub use country::Country;
pub use error::{Error, Result};
pub use graph::DiffusionGraph;
