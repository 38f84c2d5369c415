use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("vault is locked: set DIVMETER_VAULT_KEY")]
    VaultLocked,
    #[error("vault key does not open {0}")]
    VaultKeyRejected(PathBuf),
    #[error("another writer holds the store lock; retry")]
    ConflictRetryable,
    #[error("not found: {0}")]
    NotFound(String),
    #[error("public data would contain a vault name at `{path}`")]
    LeakDetected { path: String },
    #[error("invalid edition: {0}")]
    InvalidEdition(String),
    #[error("{file}: {reason}")]
    Corrupt { file: PathBuf, reason: String },
    #[error("I/O error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl StoreError {
    pub(crate) fn io(path: impl Into<PathBuf>, e: std::io::Error) -> Self {
        StoreError::Io { path: path.into(), message: e.to_string() }
    }
}
