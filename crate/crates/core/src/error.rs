use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x1}, {x2}) is a singular point")]
    SingularPoint { x1: f64, x2: f64 },

    #[error("angle branch is undefined for a pole at the origin")]
    UndefinedBranch,

    #[error("segment ({0}, {1}) -> ({2}, {3}) passes through the pole")]
    SingularEdge(f64, f64, f64, f64),

    #[error("index must be odd, got {0}")]
    EvenIndex(usize),

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("grid spacing {h} too coarse: {reason}")]
    TooCoarse { h: f64, reason: String },

    #[error("pole ({0}, {1}) lies on a lattice node or edge")]
    PoleOnLattice(f64, f64),

    #[error("pole ({0}, {1}) lies outside the domain")]
    PoleOutside(f64, f64),

    #[error("inconsistent boundary tags: {0}")]
    InconsistentTags(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("eigensolver did not converge in {iterations} iterations (best residual {best_residual:.3e})")]
    NoConvergence { iterations: usize, best_residual: f64 },

    #[error("linear solve stalled at relative residual {residual:.3e}")]
    LinearBreakdown { residual: f64, history: Vec<f64> },

    #[error("circle of radius {radius} around ({x1}, {x2}) leaves the domain")]
    CircleOutside { x1: f64, x2: f64, radius: f64 },

    #[error("no odd mode up to {max} passes the vanishing-order fit")]
    InconclusiveOrder { max: usize },

    #[error("eigenvalue #{index} ({value}) is clustered with {neighbour}")]
    Clustered { index: usize, value: f64, neighbour: f64 },

    #[error("rank-deficient design matrix ({rows} rows, {cols} columns)")]
    RankDeficient { rows: usize, cols: usize },

    #[error("radius {r} outside the admissible range [{lo}, {hi}]")]
    RadiusOutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("inputs come from different normalizations: {0}")]
    MixedNormalization(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
