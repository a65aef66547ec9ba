use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Io,
    Model,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Io => "io",
            ErrorCategory::Model => "model",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Io => 3,
            ErrorCategory::Model => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("opinion {0} is outside [0, 1]")]
    OpinionOutOfRange(f64),

    #[error("agent {0} has no neighbors")]
    IsolatedAgent(u32),

    #[error("agent id {agent} out of range for graph with {n} agents")]
    AgentOutOfRange { agent: u64, n: usize },

    #[error("snapshot has {got} opinions but graph has {expected} agents")]
    SnapshotSizeMismatch { expected: usize, got: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("assortativity undefined: {0}")]
    UndefinedAssortativity(&'static str),

    #[error("infeasible degree sequence: {0}")]
    InfeasibleDegreeSequence(String),

    #[error("empty population after filtering")]
    EmptyPopulation,

    #[error("{path}:{line}: malformed line: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: opinion {value} for agent {agent} is outside [0, 1]")]
    OpinionOutOfRangeInFile {
        path: PathBuf,
        line: usize,
        agent: u64,
        value: f64,
    },

    #[error("{path}:{line}: edge endpoint {agent} is not a known agent")]
    DanglingEndpoint {
        path: PathBuf,
        line: usize,
        agent: u64,
    },

    #[error("{path}: agent set differs from the first snapshot ({detail})")]
    SnapshotAgentMismatch { path: PathBuf, detail: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Config,
            Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_)
            | Error::MalformedLine { .. }
            | Error::OpinionOutOfRangeInFile { .. }
            | Error::DanglingEndpoint { .. }
            | Error::SnapshotAgentMismatch { .. } => ErrorCategory::Io,
            _ => ErrorCategory::Model,
        }
    }
}
