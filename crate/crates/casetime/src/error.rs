use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A CSV row that could not be parsed at all: wrong arity, an
    /// unparsable number, or an unrecognized enum token.
    #[error("row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    /// A value that parsed but falls outside its valid domain
    /// (non-positive duration, ASA class outside I-V, and so on).
    #[error("{}{reason}", .line.map(|l| format!("row {l}: ")).unwrap_or_default())]
    DomainViolation { line: Option<usize>, reason: String },

    #[error("row {line}: duplicate case id `{id}`")]
    DuplicateId { line: usize, id: String },

    #[error("csv header mismatch: expected `{expected}`, got `{got}`")]
    HeaderMismatch { expected: String, got: String },

    #[error("empty input")]
    EmptyInput,

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("feature width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("procedure `{procedure}` has {have} cases but fold assignment needs at least {need}")]
    StratumTooSmall {
        procedure: String,
        have: usize,
        need: usize,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("no boosting round was retained")]
    DegenerateEnsemble,

    #[error("{method} failed in repeat {repeat}, fold {fold}: {source}")]
    CellFit {
        method: String,
        repeat: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("model artifact: {0}")]
    Artifact(String),
}

impl Error {
    pub(crate) fn domain(reason: impl Into<String>) -> Self {
        Error::DomainViolation {
            line: None,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain_at(line: usize, reason: impl Into<String>) -> Self {
        Error::DomainViolation {
            line: Some(line),
            reason: reason.into(),
        }
    }

    /// Attaches a file path to IO errors raised while touching that file.
    pub(crate) fn file(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
