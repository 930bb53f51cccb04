use thiserror::Error;

/// Errors raised while building, validating or evaluating estimation models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not symmetric (max deviation {deviation:.3e})")]
    NotSymmetric { deviation: f64 },

    #[error("matrix is not skew-symmetric (max deviation {deviation:.3e})")]
    NotSkewSymmetric { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rho is not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("derivative {index} is not Hermitian (max deviation {deviation:.3e})")]
    NonHermitianDerivative { index: usize, deviation: f64 },

    #[error("derivative {index} is not traceless (trace {trace:.3e})")]
    DerivativeNotTraceless { index: usize, trace: f64 },

    #[error("dbeta has rank {rank} < q = {q}")]
    RankDeficientDbeta { rank: usize, q: usize },

    #[error("weight matrix is invalid: {0}")]
    InvalidWeight(String),

    #[error(
        "derivative {index} has a kernel block of norm {norm:.3e}; the SLD equation has no solution"
    )]
    KernelBlockDerivative { index: usize, norm: f64 },

    #[error("SLD residual {residual:.3e} for parameter {index} exceeds tolerance")]
    ResidualTooLarge { index: usize, residual: f64 },

    #[error("column {column} of dbeta is not in the range of the QFIM (residual {residual:.3e}); that component is not estimable")]
    InfeasibleModel { column: usize, residual: f64 },

    #[error("bound ordering violated: {0}")]
    BoundOrderingViolated(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("covariance matrix is not physical (min eigenvalue of cm + i*Omega {min_eigenvalue:.3e})")]
    UnphysicalCovariance { min_eigenvalue: f64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("Fisher information is ill-defined: outcome {outcome} has zero probability but nonzero derivative")]
    IllDefinedFim { outcome: usize },

    #[error("measurement is not locally unbiased (residual {residual:.3e})")]
    NotLocallyUnbiased { residual: f64 },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
