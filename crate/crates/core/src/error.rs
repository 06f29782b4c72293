use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("relations contain a cycle through {0} and {1}")]
    CycleDetected(usize, usize),

    #[error("element {value} is outside 1..={n}")]
    OutOfRange { value: usize, n: usize },

    #[error("enumeration exceeded the cap of {cap} rows")]
    CapExceeded { cap: usize },

    #[error("{0} is not a Fibonacci number >= 2")]
    NotFibonacci(u64),

    #[error("row {row} has a different symbol multiset than row 0")]
    NotRowBalanced { row: usize },

    #[error("row {row} sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },

    #[error("eigenvalue {value} is not a Z-linear combination of the symbols: {reason}")]
    NotZLinear { value: String, reason: String },

    #[error("QR iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("could not pair partial eigenvalues across batches: {0}")]
    PairingFailed(String),

    #[error("substitution check failed (max discrepancy {discrepancy:e}) at {substitution:?}")]
    MismatchDetected {
        discrepancy: f64,
        substitution: Vec<i64>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    ToleranceExceeded { deviation: f64, tolerance: f64 },

    #[error("orbit matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("vector sums to {0}, expected 1")]
    NotUnitRowSum(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::CycleDetected(..) => "CycleDetected",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::CapExceeded { .. } => "CapExceeded",
            Error::NotFibonacci(_) => "NotFibonacci",
            Error::NotRowBalanced { .. } => "NotRowBalanced",
            Error::NotStochastic { .. } => "NotStochastic",
            Error::NotZLinear { .. } => "NotZLinear",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::PairingFailed(_) => "PairingFailed",
            Error::MismatchDetected { .. } => "MismatchDetected",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::ToleranceExceeded { .. } => "ToleranceExceeded",
            Error::NotSymmetric(..) => "NotSymmetric",
            Error::NotUnitRowSum(_) => "NotUnitRowSum",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}
