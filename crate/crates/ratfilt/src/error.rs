use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed edge list line {line}: {detail}")]
    MalformedEdgeLine { line: usize, detail: String },

    #[error("edge list describes an empty graph")]
    EmptyGraph,

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("filter value is not finite at eigenvalue {lambda}")]
    NonFiniteFilter { lambda: f64 },

    #[error("rational filter pole near t = {t}")]
    Pole { t: f64 },

    #[error("denominator matrix is singular or ill-conditioned (solve residual {residual:e})")]
    SingularDenominator { residual: f64 },

    #[error("singular linear system")]
    SingularSystem,

    #[error("no (m, n) pair produced a fit")]
    NoFit,

    #[error("{method}: {source}")]
    Method {
        method: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn with_method(self, method: &str) -> Error {
        Error::Method {
            method: method.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
