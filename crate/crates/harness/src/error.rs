use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] robust_oco::Error),

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: robust_oco::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("failed to parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error("unknown check `{name}`; valid checks: {valid}")]
    UnknownCheck { name: String, valid: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
