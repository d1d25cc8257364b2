use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("line {line}: negative edge weight {weight}")]
    NegativeWeight { line: usize, weight: f64 },

    #[error("input contains no triplets")]
    EmptyInput,

    #[error("unknown entity `{0}`")]
    UnknownEntity(String),

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("{kind} id {id} out of range (count {count})")]
    IdOutOfRange {
        kind: &'static str,
        id: usize,
        count: usize,
    },

    #[error("edge ({head}, {relation}, {tail}) is not present in the graph")]
    EdgeNotPresent {
        head: usize,
        relation: usize,
        tail: usize,
    },

    #[error("graph pair mismatch: {0}")]
    PairMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("propagation diverged at iteration {iteration}: non-finite value at entity {entity}")]
    Diverged { iteration: usize, entity: usize },

    #[error("edge {edge} has weight {weight}, outside {expected}")]
    WeightOutOfRange {
        edge: usize,
        weight: f64,
        expected: &'static str,
    },

    #[error("entity {0} has outgoing edges but zero total out-weight")]
    ZeroOutWeight(usize),

    #[error("sample {sample} has {size} elements, fewer than k = {k}")]
    SampleTooSmall { sample: usize, size: usize, k: usize },

    #[error("syntax error at position {position}: {reason}")]
    Syntax { position: usize, reason: String },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("stack {0} during program execution")]
    Stack(&'static str),

    #[error("fuzzy set length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("fuzzy membership {value} at entity {entity} is outside [0, 1]")]
    OutOfRange { entity: usize, value: f64 },

    #[error("query sampling exhausted {attempts} attempts with {found} of {wanted} samples")]
    SamplingExhausted {
        attempts: usize,
        found: usize,
        wanted: usize,
    },

    #[error("embedding table mismatch: {0}")]
    TableMismatch(String),

    #[error("unsupported pattern `{pattern}` for scorer `{scorer}`")]
    UnsupportedPattern { scorer: String, pattern: String },

    #[error("metric input error: {0}")]
    Metric(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors raised by numeric divergence rather than bad input.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Diverged { .. })
    }
}
