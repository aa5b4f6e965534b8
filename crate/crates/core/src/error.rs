use thiserror::Error;

/// Errors shared by every module in the crate.
///
/// Witness-producing operations treat a missing witness as an error, never as
/// a silently degraded result: if a lemma's guarantee cannot be realized
/// numerically the caller learns about it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("group mismatch: operands live in Z/{left} and Z/{right}")]
    GroupMismatch { left: u64, right: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no regular radius with growth constant {c_reg} in [{lo}, {hi}); enlarge the constant")]
    NoRegularRadius { lo: String, hi: String, c_reg: String },

    #[error("support violation: function value {value:e} at {point} lies outside the cutoff support")]
    SupportViolation { point: u64, value: f64 },

    #[error("zero function: {0}")]
    ZeroFunction(&'static str),

    #[error("set of size {size} exceeds the sign-pattern enumeration cap {cap}")]
    SizeCapExceeded { size: usize, cap: usize },

    #[error("no radius found: {0}")]
    NoRadiusFound(String),

    #[error("hypothesis fails: {0}")]
    HypothesisFails(String),

    #[error("increment not realized: best convolution value {realized} is short of claimed {claimed}")]
    IncrementNotRealized { realized: f64, claimed: f64 },

    #[error("iteration diverged after {steps} steps: {reason}")]
    IterationDiverged { steps: usize, reason: String },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("work cap exceeded: {work} > {cap}")]
    WorkCapExceeded { work: u128, cap: u128 },

    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    #[error("pigeonhole guarantee not met: expected a progression of length {expected}, best found {found}")]
    PigeonholeFailed { expected: usize, found: usize },

    #[error("no subspace witness found: {0}")]
    SubspaceNotFound(String),
}

pub type Result<T> = std::result::Result<T, Error>;
