use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("undefined for this input: {0}")]
    Undefined(&'static str),

    #[error("design matrix is rank deficient: column `{column}` is linearly dependent on the preceding columns")]
    RankDeficient { column: String },

    #[error("cluster-robust inference needs at least 2 clusters, got {0}")]
    TooFewClusters(usize),

    #[error("missing artifact {}: run `{run_first}` first", path.display())]
    MissingArtifact { path: PathBuf, run_first: &'static str },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
