use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("could not build a simple {r}-regular graph on n={n} after {retries} restarts")]
    RetryExhausted { n: usize, r: usize, retries: usize },

    #[error("no instance passed the quasirandomness check after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("perfect matching sampler gave up after {0} restarts")]
    RestartExhausted(usize),

    #[error("graph has no perfect matching")]
    NoPerfectMatching,

    #[error("degree-deficiency subgraph is infeasible: {0}")]
    Infeasible(String),

    #[error("absorption aborted at level {level}: {reason}")]
    LevelAbort { level: usize, reason: String },

    #[error("regularity violation: {0}")]
    RegularityViolation(String),

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("config error at line {line}: {msg}")]
    Schema { line: usize, msg: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 for algorithmic aborts, 3 for invariant
    /// violations, 4 for bad input or configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::RetryExhausted { .. }
            | Error::GenerationFailed { .. }
            | Error::RestartExhausted(_)
            | Error::NoPerfectMatching
            | Error::Infeasible(_)
            | Error::LevelAbort { .. } => 2,
            Error::RegularityViolation(_) | Error::Invariant(_) => 3,
            Error::Io(_)
            | Error::Parse { .. }
            | Error::InvalidGraph(_)
            | Error::InvalidParams(_)
            | Error::SizeCap(_)
            | Error::Schema { .. }
            | Error::Json(_) => 4,
        }
    }
}
