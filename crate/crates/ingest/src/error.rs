use divmeter_core::{Facet, PersonId, Role};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed XML at line {line} (byte {offset}): {message}")]
    MalformedXml { line: usize, offset: u64, message: String },
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    HeaderMismatch { expected: String, found: String },
    #[error("{file}: malformed CSV at line {line}: {message}")]
    MalformedCsv { file: &'static str, line: usize, message: String },
    #[error("{file} line {line}: {reason}")]
    InvalidTable { file: &'static str, line: usize, reason: String },
    #[error("conflicting manual {facet} labels for {role} {person}: {first} vs {second}")]
    ConflictingManualLabels { person: PersonId, role: Role, facet: Facet, first: String, second: String },
    #[error("invalid edition: {0}")]
    InvalidEdition(String),
}

/// An input item that was dropped without aborting the run.
///
/// `reason` never echoes name cells, so reports can be published.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    /// Which input the item came from: `dblp`, `annotations` or `affiliations`.
    pub source: String,
    /// 1-based line in the source file, when known.
    pub line: Option<usize>,
    /// Source record key (DBLP key), when known.
    pub key: Option<String>,
    pub reason: String,
}
