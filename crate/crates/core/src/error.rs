use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{matrix} is rank deficient: numerical rank {rank} < {cols} columns")]
    RankDeficient {
        matrix: &'static str,
        rank: usize,
        cols: usize,
    },

    #[error("search space of 2^{log2_candidates:.1} candidates exceeds the enumeration budget of 2^{log2_budget}")]
    Capacity {
        log2_candidates: f64,
        log2_budget: u32,
    },

    #[error("SDR solver did not converge after {iterations} sweeps (last relative change {last_change:e}, tolerance {tolerance:e})")]
    NotConverged {
        iterations: usize,
        last_change: f64,
        tolerance: f64,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
