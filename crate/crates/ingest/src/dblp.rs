//! Reader for DBLP XML exports.
//!
//! Only `inproceedings` records become [`RawPaperRecord`]s; `proceedings`
//! and every other publication type are read past. DBLP marks homonyms
//! with a four-digit suffix ("John Smith 0002"), which is split off into
//! [`AuthorName::disambiguation`].

use std::io::Read;

use quick_xml::events::{BytesRef, Event};
use quick_xml::{Reader, XmlVersion};
use serde::{Deserialize, Serialize};

use crate::error::{IngestError, Skipped};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorName {
    pub name: String,
    /// The DBLP homonym number, e.g. `0002`.
    pub disambiguation: Option<String>,
}

impl AuthorName {
    pub fn parse(raw: &str) -> Self {
        let trimmed = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        if let Some((name, tag)) = trimmed.rsplit_once(' ') {
            if tag.len() == 4 && tag.bytes().all(|b| b.is_ascii_digit()) && !name.is_empty() {
                return AuthorName { name: name.to_string(), disambiguation: Some(tag.to_string()) };
            }
        }
        AuthorName { name: trimmed, disambiguation: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPaperRecord {
    /// DBLP record key, e.g. `conf/toyconf/OneT21`.
    pub key: Option<String>,
    pub title: String,
    pub authors: Vec<AuthorName>,
    /// The `booktitle` of the record.
    pub venue: String,
    pub year: i32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DblpParse {
    pub records: Vec<RawPaperRecord>,
    /// Records dropped for missing or invalid fields.
    pub skipped: Vec<Skipped>,
}

#[derive(Default)]
struct Draft {
    key: Option<String>,
    line: usize,
    title: Option<String>,
    authors: Vec<AuthorName>,
    venue: Option<String>,
    year: Option<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Author,
    Title,
    Year,
    Booktitle,
}

impl Field {
    fn from_tag(tag: &str) -> Option<Field> {
        match tag {
            "author" => Some(Field::Author),
            "title" => Some(Field::Title),
            "year" => Some(Field::Year),
            "booktitle" => Some(Field::Booktitle),
            _ => None,
        }
    }
}

fn line_of(text: &str, offset: u64) -> usize {
    let end = (offset as usize).min(text.len());
    text.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
}

/// Line numbers for monotonically increasing offsets.
struct LineCursor<'a> {
    text: &'a [u8],
    offset: usize,
    line: usize,
}

impl LineCursor<'_> {
    fn at(&mut self, offset: u64) -> usize {
        let end = (offset as usize).min(self.text.len());
        if end < self.offset {
            return line_of(std::str::from_utf8(self.text).unwrap_or(""), offset);
        }
        self.line += self.text[self.offset..end].iter().filter(|&&b| b == b'\n').count();
        self.offset = end;
        self.line
    }
}

fn resolve_entity(r: &BytesRef<'_>) -> Option<String> {
    if let Ok(Some(c)) = r.resolve_char_ref() {
        return Some(c.to_string());
    }
    if r.is_char_ref() {
        return None;
    }
    let name: &str = r;
    if let Some(s) = quick_xml::escape::resolve_predefined_entity(name) {
        return Some(s.to_string());
    }
    let literal = format!("&{name};");
    let decoded = html_escape::decode_html_entities(&literal);
    (decoded != literal).then(|| decoded.into_owned())
}

/// Parses a DBLP export into paper records.
///
/// Records lacking a title, author, year or booktitle are skipped and
/// reported; malformed XML aborts with the line and byte offset.
pub fn parse_dblp<R: Read>(mut input: R) -> Result<DblpParse, IngestError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(|e| IngestError::Io(e.to_string()))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| {
        let offset = e.valid_up_to() as u64;
        IngestError::MalformedXml {
            line: line_of(std::str::from_utf8(&bytes[..e.valid_up_to()]).unwrap_or(""), offset),
            offset,
            message: "input is not valid UTF-8".into(),
        }
    })?;
    parse_dblp_str(text)
}

pub fn parse_dblp_str(text: &str) -> Result<DblpParse, IngestError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().check_end_names = true;

    let malformed = |reader: &Reader<&[u8]>, message: String| {
        let offset = reader.error_position().max(reader.buffer_position().min(text.len() as u64));
        IngestError::MalformedXml { line: line_of(text, offset), offset, message }
    };

    let mut out = DblpParse::default();
    let mut depth = 0usize;
    let mut saw_root = false;
    let mut current: Option<Draft> = None;
    let mut record_depth = 0usize;
    let mut field: Option<(Field, usize)> = None;
    let mut buf = String::new();
    let mut lines = LineCursor { text: text.as_bytes(), offset: 0, line: 1 };

    loop {
        let pos = reader.buffer_position();
        let event = reader.read_event().map_err(|e| malformed(&reader, e.to_string()))?;
        match event {
            Event::Start(e) => {
                if depth == 0 {
                    if saw_root {
                        return Err(malformed(&reader, "multiple root elements".into()));
                    }
                    saw_root = true;
                }
                depth += 1;
                let tag = e.local_name();
                if current.is_none() && tag.as_ref() == "inproceedings" {
                    let key = e
                        .try_get_attribute("key")
                        .ok()
                        .flatten()
                        .and_then(|a| a.normalized_value(XmlVersion::Implicit1_0).ok().map(|v| v.into_owned()));
                    current = Some(Draft { key, line: lines.at(pos), ..Draft::default() });
                    record_depth = depth;
                } else if current.is_some() && field.is_none() && depth == record_depth + 1 {
                    if let Some(f) = Field::from_tag(tag.as_ref()) {
                        field = Some((f, depth));
                        buf.clear();
                    }
                }
            }
            Event::Empty(_) => {
                if depth == 0 {
                    if saw_root {
                        return Err(malformed(&reader, "multiple root elements".into()));
                    }
                    saw_root = true;
                }
            }
            Event::End(_) => {
                if depth == 0 {
                    return Err(malformed(&reader, "unexpected closing tag".into()));
                }
                if let Some((f, d)) = field {
                    if d == depth {
                        if let Some(draft) = current.as_mut() {
                            let value = buf.split_whitespace().collect::<Vec<_>>().join(" ");
                            match f {
                                Field::Author => {
                                    if !value.is_empty() {
                                        draft.authors.push(AuthorName::parse(&value));
                                    }
                                }
                                Field::Title => draft.title = Some(value),
                                Field::Year => draft.year = Some(value),
                                Field::Booktitle => draft.venue = Some(value),
                            }
                        }
                        field = None;
                    }
                }
                if current.is_some() && depth == record_depth {
                    let draft = current.take().expect("checked above");
                    match finish(draft) {
                        Ok(r) => out.records.push(r),
                        Err(s) => out.skipped.push(s),
                    }
                }
                depth -= 1;
            }
            Event::Text(t) => {
                if field.is_some() {
                    buf.push_str(&t.xml10_content());
                } else if depth == 0 && !t.xml10_content().trim().is_empty() {
                    return Err(malformed(&reader, "text outside the root element".into()));
                }
            }
            Event::CData(c) => {
                if field.is_some() {
                    buf.push_str(&c);
                }
            }
            Event::GeneralRef(r) => {
                if depth == 0 {
                    return Err(malformed(&reader, "entity reference outside the root element".into()));
                }
                match resolve_entity(&r) {
                    Some(s) if field.is_some() => buf.push_str(&s),
                    Some(_) => {}
                    None => {
                        let name: &str = &r;
                        return Err(malformed(&reader, format!("unknown entity `&{name};`")));
                    }
                }
            }
            Event::Eof => break,
            Event::Decl(_) | Event::PI(_) | Event::Comment(_) | Event::DocType(_) => {}
        }
    }
    if depth != 0 {
        return Err(malformed(&reader, "unexpected end of input inside an element".into()));
    }
    if !saw_root {
        return Err(malformed(&reader, "no root element".into()));
    }
    Ok(out)
}

fn finish(d: Draft) -> Result<RawPaperRecord, Skipped> {
    let skip = |reason: String| Skipped { source: "dblp".into(), line: Some(d.line), key: d.key.clone(), reason };
    let title = match d.title.as_deref() {
        Some(t) if !t.is_empty() => t.to_string(),
        _ => return Err(skip("missing required field `title`".into())),
    };
    if d.authors.is_empty() {
        return Err(skip("missing required field `author`".into()));
    }
    let venue = match d.venue.as_deref() {
        Some(v) if !v.is_empty() => v.to_string(),
        _ => return Err(skip("missing required field `booktitle`".into())),
    };
    let year = match d.year.as_deref() {
        None | Some("") => return Err(skip("missing required field `year`".into())),
        Some(y) if y.len() == 4 && y.bytes().all(|b| b.is_ascii_digit()) => y.parse().expect("four digits"),
        Some(_) => return Err(skip("field `year` is not a four-digit year".into())),
    };
    Ok(RawPaperRecord { key: d.key, title, authors: d.authors, venue, year })
}
