use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("invalid deployment state: {0}")]
    State(String),

    #[error("unstable queue at VM `{vm}`: offered load {load} >= usable capability {capability}")]
    Unstable { vm: String, load: f64, capability: f64 },

    #[error("VNF `{vnf}` of service `{service}` has no candidate VM")]
    NoCandidate { service: String, vnf: String },

    #[error("no assignment covers every VNF node")]
    InfeasibleMatching,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no capacity constraint in the IIS touches a VM used by service `{0}`")]
    DeadEnd(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration of {count} configurations exceeds the cap of {cap}")]
    Explosion { count: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }
}
