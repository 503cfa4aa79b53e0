use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("tuple has {found} values, schema has {expected} columns")]
    Arity { expected: usize, found: usize },

    #[error("column `{column}`: {reason}")]
    Validation { column: String, reason: String },

    #[error("model lifecycle: {0}")]
    Lifecycle(&'static str),

    #[error("model received no data")]
    EmptyData,

    #[error("tree cursor misuse: {0}")]
    Cursor(String),

    #[error("invalid branch distribution: {0}")]
    Distribution(String),

    #[error("codec: {0}")]
    Codec(String),

    #[error("bit source exhausted before the branch could be resolved")]
    BitsExhausted,

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { expected: u16, found: u16 },

    #[error("corrupt archive after {decoded} decoded tuples: {reason}")]
    Corrupt { decoded: usize, reason: String },

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error("structure: {0}")]
    Structure(String),

    #[error("random access unavailable: {0}")]
    NoIndex(&'static str),

    #[error("row {index} out of range (archive holds {len} rows)")]
    RowOutOfRange { index: usize, len: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::Malformed(msg.into())
    }
}
