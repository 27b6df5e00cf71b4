use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("missing column `{0}` in input header")]
    MissingColumn(String),

    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("input contains no data rows")]
    EmptyInput,

    #[error("unknown class name `{0}`")]
    UnknownClassName(String),

    #[error("feature set differs from the fitted scaler")]
    FeatureMismatch,

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("invalid feature subset: {0}")]
    InvalidSubset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("class `{0}` has zero records")]
    ZeroClass(String),

    #[error("row arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("score matrix and labels are misaligned: {0}")]
    AlignmentMismatch(String),

    #[error("overlap model has already been resolved")]
    NotFitted,

    #[error("overlap model must be resolved before correcting scores")]
    NotResolved,

    #[error("score matrices have different shapes")]
    ShapeMismatch,

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("test data does not match the artifact schema: {0}")]
    SchemaMismatch(String),

    #[error("unsupported artifact format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("corrupt artifact: {0}")]
    CorruptArtifact(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for failures caused by the content of user-supplied data rather than
    /// by the filesystem.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Io(_))
            && !matches!(self, Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)))
    }
}
