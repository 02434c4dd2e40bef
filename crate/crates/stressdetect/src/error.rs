use std::path::PathBuf;

use stressdetect_core::SignalKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {bad_rows} of {total_rows} rows could not be parsed", path.display())]
    MalformedFile { path: PathBuf, bad_rows: usize, total_rows: usize },
    #[error("{}: unrecognized header {header:?}", path.display())]
    MalformedHeader { path: PathBuf, header: String },
    #[error("{}: no valid samples", path.display())]
    EmptySignal { path: PathBuf },
    #[error("{}: header names a {found:?} column, expected {expected:?}", path.display())]
    KindMismatch { path: PathBuf, expected: SignalKind, found: SignalKind },
    #[error("{}: line {line}: {reason}", path.display())]
    MalformedProtocol { path: PathBuf, line: usize, reason: String },
    #[error("{}: corrupt model file: {reason}", path.display())]
    CorruptModelFile { path: PathBuf, reason: String },
    #[error("model file format version {found}, this build reads version {expected}")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("{}: malformed feature file: {reason}", path.display())]
    MalformedFeatures { path: PathBuf, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] stressdetect_core::Error),
    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// Innermost error below any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Configuration and input-validation failures, as opposed to failures
    /// while running the pipeline.
    pub fn is_validation(&self) -> bool {
        matches!(
            self.root(),
            Error::Config(_) | Error::Core(stressdetect_core::Error::InvalidConfig(_) | stressdetect_core::Error::InvalidSpec(_))
        )
    }
}

pub trait ResultExt<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T, E: Into<Error>> ResultExt<T> for std::result::Result<T, E> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| e.into().context(context()))
    }
}
