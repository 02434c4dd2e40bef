use alloc::boxed::Box;
use alloc::string::String;

use crate::signal::SignalKind;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes of the numerical pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("series is empty")]
    EmptySeries,
    #[error("series is degenerate: {0}")]
    DegenerateSeries(&'static str),
    #[error("normalization statistics are degenerate (std must be > 0)")]
    DegenerateStats,
    #[error("timestamps and values differ in length ({timestamps} vs {values})")]
    LengthMismatch { timestamps: usize, values: usize },
    #[error("timestamps must be strictly increasing (violation at index {0})")]
    NonMonotoneTimestamps(usize),
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("protocol segments overlap or are out of order at segment {0}")]
    OverlappingSegments(usize),
    #[error("protocol must start with a Baseline segment")]
    NonBaselineStart,
    #[error("protocol segment {0} has end <= start")]
    EmptySegment(usize),
    #[error("protocol has no segments")]
    EmptyProtocol,
    #[error("session has neither heart rate nor R-R interval signal")]
    MissingCardiacSignal,
    #[error("device {0:?} does not record EDA")]
    EdaNotSupportedForDevice(crate::signal::DeviceKind),
    #[error("session has no signals")]
    NoSignals,
    #[error("duplicate {0:?} signal in session")]
    DuplicateSignal(SignalKind),
    #[error("{kind:?} signal: {source}")]
    Signal { kind: SignalKind, source: Box<Error> },
    #[error("signal is not uniformly sampled")]
    NonUniformSampling,
    #[error("session too short: {duration_s} s available, {required_s} s required")]
    SessionTooShort { duration_s: f64, required_s: f64 },
    #[error("solver did not converge: KKT residual {residual:e} after {iterations} iterations")]
    DidNotConverge { residual: f64, iterations: usize },
    #[error("problem dimension {0} too large for exhaustive enumeration")]
    DimensionTooLarge(usize),
    #[error("linear system is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("window has {found} samples, at least {required} required")]
    InsufficientSamples { found: usize, required: usize },
    #[error("no usable windows in session")]
    NoUsableWindows,
    #[error("training data contains a single class")]
    SingleClassTraining,
    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("labels contain a single class")]
    SingleClassLabels,
    #[error("need at least 2 subjects, got {0}")]
    TooFewSubjects(usize),
    #[error("subject {0} appears in more than one matrix")]
    DuplicateSubject(String),
    #[error("input is empty")]
    EmptyInput,
    #[error("invalid cohort specification: {0}")]
    InvalidSpec(String),
}

impl Error {
    pub(crate) fn for_signal(self, kind: SignalKind) -> Self {
        match self {
            Error::Signal { .. } => self,
            other => Error::Signal { kind, source: Box::new(other) },
        }
    }
}
