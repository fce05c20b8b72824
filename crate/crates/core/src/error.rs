use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which family of constraints could not be met.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    Nonnegativity,
    Budget,
    Rate,
    Sensing,
}

impl std::fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConstraintFamily::Nonnegativity => "nonnegativity",
            ConstraintFamily::Budget => "budget",
            ConstraintFamily::Rate => "rate",
            ConstraintFamily::Sensing => "sensing",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    #[error("accuracy error in {func}: {msg}")]
    Accuracy { func: &'static str, msg: String },

    #[error("target probability {target} is already met at zero noncentrality ({floor})")]
    InfeasibleTarget { target: f64, floor: f64 },

    #[error("symbol block is rank deficient (singular values {smallest:e} / {largest:e})")]
    RankDeficient { smallest: f64, largest: f64 },

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("no feasible power allocation (worst violated family: {family}, min slack {min_slack:e})")]
    Infeasible { family: ConstraintFamily, min_slack: f64 },

    #[error("solver hit the iteration cap of {cap} Newton steps")]
    MaxIterations { cap: usize },

    #[error("rejection sampling found no feasible point in {attempts} attempts")]
    SamplingExhausted { attempts: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
}

impl Error {
    pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { func, msg: msg.into() }
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// Short machine-readable tag used by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Accuracy { .. } => "accuracy",
            Error::InfeasibleTarget { .. } => "infeasible_target",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Config { .. } => "config",
            Error::Infeasible { .. } => "infeasible",
            Error::MaxIterations { .. } => "max_iterations",
            Error::SamplingExhausted { .. } => "sampling_exhausted",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
        }
    }
}
