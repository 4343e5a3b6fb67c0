use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("a must be nonzero and finite (got {0})")]
    InvalidLossParameter(f64),

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// `exp(a (delta - theta))` does not fit in an f64.
    #[error("LINEX loss overflow: exponent a*(delta - theta) = {exponent:e} exceeds the f64 range")]
    LossOverflow { exponent: f64 },

    #[error("the Bayes estimator needs a nonsingular covariance (|rho| < 1), got rho = {rho}")]
    SingularCovariance { rho: f64 },

    #[error("estimator {0} is not of the equivariant form Y[2] + phi(T1, T2)")]
    NotEquivariant(String),

    #[error("improved case {case} does not apply to a = {a}, rho = {rho}")]
    OutsideCaseRegion { case: u8, a: f64, rho: f64 },

    #[error("simulation diverged at replication {rep} for estimator {estimator}: {source}")]
    Divergence {
        rep: usize,
        estimator: String,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("unequal group sizes: {first} has {first_len} rows, {second} has {second_len} rows")]
    UnequalGroups {
        first: String,
        first_len: usize,
        second: String,
        second_len: usize,
    },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
