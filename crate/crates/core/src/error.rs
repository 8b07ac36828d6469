use thiserror::Error;

/// Every failure mode of the toolkit.
///
/// Variants are grouped by how the command-line driver reports them:
/// configuration problems, numerical problems, and verdict-level failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("DimensionMismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },
    #[error("SingularPoint: {0}")]
    SingularPoint(String),
    #[error("BoundViolation: |F| = {value} exceeds declared sup_bound {bound}")]
    BoundViolation { value: f64, bound: f64 },
    #[error("MissingBound: {0}")]
    MissingBound(String),
    #[error("EmptyList: {0}")]
    EmptyList(String),
    #[error("Parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("NoConvergentSubsequence: {survivors} survivor(s); {note}")]
    NoConvergentSubsequence { survivors: usize, note: String },
    #[error("FamilyNotUnbounded: {0}")]
    FamilyNotUnbounded(String),
    #[error("TruncationUnstable: relative change {rel:.3e} under truncation doubling")]
    TruncationUnstable { rel: f64 },
    #[error("NegativeKernel: kernel value {value} at {at}")]
    NegativeKernel { value: f64, at: String },
    #[error("E1Violated: {0}")]
    E1Violated(String),
    #[error("SingularKernel: singular kernels are not supported by this operation")]
    SingularKernel,
    #[error("CertificateInvalid: theta={theta}")]
    CertificateInvalid { theta: f64 },
    #[error("EmptyInterior: {0}")]
    EmptyInterior(String),
    #[error("InsufficientSweeps: {got} usable sweep(s), need at least {need}")]
    InsufficientSweeps { got: usize, need: usize },
    #[error("NonpositiveTime: t = {0}")]
    NonpositiveTime(f64),
    #[error("PreconditionFailed: {0}")]
    PreconditionFailed(String),
    #[error("StepUnstable: step halving changed the table by {rel:.3e} (relative)")]
    StepUnstable { rel: f64 },
    #[error("NoDecay: fitted decay rate {delta_est} is not positive")]
    NoDecay { delta_est: f64 },
    #[error("HorizonExceedsTable: horizon {horizon} > table end {t_max}")]
    HorizonExceedsTable { horizon: f64, t_max: f64 },
    #[error("LatticeMisaligned: {0}")]
    LatticeMisaligned(String),
    #[error("Config: {0}")]
    Config(String),
    #[error("Io: {0}")]
    Io(String),
}

impl Error {
    /// Exit code used by the command-line driver for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::Io(_) => 2,
            Error::NoConvergentSubsequence { .. } => 1,
            _ => 3,
        }
    }

    pub fn dim(expected: usize, got: usize, context: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            expected,
            got,
            context: context.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
