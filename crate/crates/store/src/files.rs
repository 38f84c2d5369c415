use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::StoreError;

pub(crate) const PUBLIC_MAGIC: &[u8] = b"DIVMETER-PUBLIC v1\n";
pub(crate) const VAULT_MAGIC: &[u8] = b"DIVMETER-VAULT v1\n";

/// JSON with object keys sorted, pretty-printed, newline-terminated.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("store types serialize to JSON");
    let mut out = serde_json::to_string_pretty(&value).expect("JSON values serialize");
    out.push('\n');
    out
}

/// Reads a file body after its magic line. `Ok(None)` when the file is absent.
pub(crate) fn read_framed(path: &Path, magic: &[u8]) -> Result<Option<Vec<u8>>, StoreError> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(StoreError::io(path, e)),
    };
    match bytes.strip_prefix(magic) {
        Some(body) => Ok(Some(body.to_vec())),
        None => Err(StoreError::Corrupt { file: path.into(), reason: "missing or unsupported format header".into() }),
    }
}

/// Writes `magic + body` to a temporary file beside `path`, synced, ready to be renamed over it.
pub(crate) fn stage(path: &Path, magic: &[u8], body: &[u8]) -> Result<tempfile::NamedTempFile, StoreError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| StoreError::io(dir, e))?;
    let file = tmp.as_file_mut();
    file.write_all(magic)
        .and_then(|_| file.write_all(body))
        .and_then(|_| file.sync_all())
        .map_err(|e| StoreError::io(path, e))?;
    Ok(tmp)
}

pub(crate) fn commit(tmp: tempfile::NamedTempFile, path: &Path) -> Result<(), StoreError> {
    tmp.persist(path).map_err(|e| StoreError::io(path, e.error))?;
    Ok(())
}

pub(crate) fn write_atomically(path: &Path, magic: &[u8], body: &[u8]) -> Result<(), StoreError> {
    commit(stage(path, magic, body)?, path)
}
