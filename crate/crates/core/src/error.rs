use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("catalog: {0}")]
    Catalog(String),
    #[error("scene generation: {0}")]
    Generation(String),
    #[error("task parse: {0}")]
    TaskParse(String),
    #[error("{path}: line {line}, column {column}: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("catalog mismatch: unknown object type `{0}`")]
    CatalogMismatch(String),
    #[error("unsupported schema `{found}` (expected `{expected}`)")]
    Schema { found: String, expected: String },
    #[error("posterior normalization failed: total likelihood is zero")]
    Normalization,
    #[error("support of size {0} exceeds the enumeration limit")]
    SupportOverflow(usize),
    #[error("metrics: {0}")]
    Metrics(String),
    #[error("episode {id}: {msg}")]
    Episode { id: String, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
