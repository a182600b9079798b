use crate::multitau::Lifecycle;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the crate.
///
/// Variants are grouped by stage: event-stream validation, correlator
/// lifecycle and arithmetic, fitting, and file parsing. The CLI maps these
/// groups onto distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("event {index} is not later than its predecessor")]
    NonMonotonicEvents { index: usize },

    #[error("gap of {gap} ticks before event {index} is below the 8-tick detector pulse width")]
    EventGapTooSmall { index: usize, gap: u64 },

    #[error("event {index} lies at or beyond the stream duration")]
    EventBeyondDuration { index: usize },

    #[error("interval of {value} ticks at position {position} would violate the 8-tick pulse width")]
    CorruptInterval { position: usize, value: u64 },

    #[error("sample period must be at least one tick")]
    ZeroSamplePeriod,

    #[error("invalid correlator configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{op} is not permitted in the {state:?} state")]
    Lifecycle { op: &'static str, state: Lifecycle },

    #[error("no data to snapshot: correlator has not started processing")]
    NoData,

    #[error("64-bit accumulator overflow in block {block}, channel {channel}")]
    AccumulatorOverflow { block: usize, channel: usize },

    #[error("field recurrence coefficient {0} is outside [0, 1]")]
    UnstableCoefficient(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit is rank-deficient: decay rate is not identifiable from the data")]
    RankDeficient,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
