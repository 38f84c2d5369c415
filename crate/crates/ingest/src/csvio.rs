use std::io::Read;

use crate::error::IngestError;

pub(crate) struct Row {
    pub line: usize,
    /// Decoded cells, or why the row could not be decoded.
    pub cells: Result<Vec<String>, String>,
}

impl Row {
    pub fn cell(cells: &[String], i: usize) -> &str {
        cells.get(i).map(|s| s.trim()).unwrap_or("")
    }
}

pub(crate) struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Reads an RFC 4180 table whose header must start with `expected`.
/// Further trailing columns are allowed.
pub(crate) fn read_table<R: Read>(input: R, file: &'static str, expected: &[&str]) -> Result<Table, IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut records = reader.byte_records();

    let mismatch = |found: String| IngestError::HeaderMismatch { expected: expected.join(","), found };
    let header = match records.next() {
        None => return Err(mismatch(String::new())),
        Some(Err(e)) => return Err(fatal(file, e)),
        Some(Ok(rec)) => {
            let mut cells = Vec::with_capacity(rec.len());
            for (i, raw) in rec.iter().enumerate() {
                let raw = if i == 0 { raw.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(raw) } else { raw };
                let cell = std::str::from_utf8(raw).map_err(|_| mismatch("…".into()))?;
                cells.push(cell.trim().to_string());
            }
            cells
        }
    };
    if header.len() < expected.len() || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(mismatch(redacted(&header)));
    }

    let mut rows = Vec::new();
    for result in records {
        match result {
            Ok(rec) => {
                let line = rec.position().map_or(0, |p| p.line() as usize);
                let cells: Result<Vec<String>, String> = rec
                    .iter()
                    .map(|raw| {
                        std::str::from_utf8(raw).map(str::to_string).map_err(|_| "row is not valid UTF-8".to_string())
                    })
                    .collect();
                rows.push(Row { line, cells });
            }
            Err(e) => {
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(fatal(file, e));
                }
                let line = e.position().map_or(0, |p| p.line() as usize);
                rows.push(Row { line, cells: Err(format!("unreadable row: {e}")) });
            }
        }
    }
    Ok(Table { header, rows })
}

/// The found header for error messages. Cells that do not look like column
/// names are masked: a file without header row starts with a data row.
fn redacted(header: &[String]) -> String {
    let looks_like_column =
        |c: &str| c.len() <= 32 && c.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_');
    header.iter().map(|c| if looks_like_column(c) { c.as_str() } else { "…" }).collect::<Vec<_>>().join(",")
}

fn fatal(file: &'static str, e: csv::Error) -> IngestError {
    match e.kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io.to_string()),
        _ => IngestError::MalformedCsv {
            file,
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        },
    }
}
