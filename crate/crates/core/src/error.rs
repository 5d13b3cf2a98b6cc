use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("missing column `{0}` in input header")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("negative exposure at row {row}: {value}")]
    NegativeExposure { row: usize, value: f64 },

    #[error("empty input: no exposures")]
    Empty,

    #[error("borrower `{0}` has neither pd nor risk_category")]
    MissingRisk(String),

    #[error("borrower `{0}` has no risk_category")]
    MissingCategory(String),

    #[error("borrower `{0}` has no pd")]
    MissingPd(String),

    #[error("borrowers without pd or lgd: {0:?}")]
    MissingLgd(Vec<String>),

    #[error("zero-weight borrower column: `{0}`")]
    ZeroWeightColumn(String),

    #[error("lender `{0}` has no exposures")]
    EmptyLender(String),

    #[error("unknown borrower `{0}`")]
    UnknownBorrower(String),

    #[error("unknown lender `{0}`")]
    UnknownLender(String),

    #[error("duplicate lender id `{0}`")]
    DuplicateLender(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("impact matrix has zero diagonal entry for lender {0}")]
    ZeroDiagonal(usize),

    #[error("maturity adjustment singular (1 - 1.5 b <= 0)")]
    MaturitySingular,

    #[error("probability of default must lie strictly inside (0, 1), got {0}")]
    DegeneratePd(f64),

    #[error("share vector does not sum to one (sum = {0})")]
    ShareSum(f64),

    #[error("portfolio capital K must be positive")]
    ZeroCapital,

    #[error("expected lgd is zero for a borrower with nonzero share")]
    ZeroLgd,

    #[error("dependency increment out of range: {0}")]
    DependencyIncrement(f64),

    #[error("underdetermined calibration: {0} positive gap(s), need at least 2")]
    Underdetermined(usize),

    #[error("no eligible borrower pair: {0}")]
    NoEligiblePair(String),

    #[error("downgrade to a safer category for borrower `{id}` ({from} -> {to})")]
    SaferDowngrade { id: String, from: u32, to: u32 },

    #[error("conservation violated in trial {trial}: {what}")]
    Conservation { trial: usize, what: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
