//! Institution registry and affiliation resolution.
//!
//! The registry is a GRID-style table (`canonical,aliases,type,country`,
//! aliases pipe-separated). Affiliation strings are resolved in stages:
//!
//! 1. exact match of the whole string against a canonical name or alias;
//! 2. the longest alias occurring in the string on word boundaries
//!    (ties go to the entry listed first);
//! 3. a trailing `, <country name>` segment, which yields a country only;
//! 4. nothing.
//!
//! Comparison is on normalized text: diacritics stripped, case-folded,
//! punctuation turned into spaces. Only the first `;`-separated segment of
//! an affiliation string is considered.

use std::collections::HashMap;
use std::io::Read;

use divmeter_core::{Business, CountryCode};
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::csvio::{read_table, Row};
use crate::error::IngestError;

pub const REGISTRY_HEADER: [&str; 4] = ["canonical", "aliases", "type", "country"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstitutionRegistryEntry {
    pub canonical: String,
    pub aliases: Vec<String>,
    pub kind: Business,
    pub country: Option<CountryCode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchKind {
    Exact,
    Substring,
    CountrySuffix,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub business: Business,
    pub country: Option<CountryCode>,
    pub match_kind: MatchKind,
    /// Canonical name of the matched institution.
    pub institution: Option<String>,
}

impl Resolution {
    fn none() -> Self {
        Resolution { business: Business::Unknown, country: None, match_kind: MatchKind::None, institution: None }
    }
}

#[derive(Debug, Clone, Default)]
pub struct InstitutionRegistry {
    entries: Vec<InstitutionRegistryEntry>,
    /// normalized name or alias -> first entry carrying it
    names: HashMap<String, usize>,
    max_tokens: usize,
}

/// Normalization shared by registry names and affiliation strings.
pub fn normalize_affiliation(s: &str) -> String {
    let folded: String = s
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .to_lowercase();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The segment of a multi-affiliation string that counts for indexing.
pub fn first_segment(raw: &str) -> &str {
    raw.split(';').next().unwrap_or("").trim()
}

impl InstitutionRegistry {
    pub fn new(entries: Vec<InstitutionRegistryEntry>) -> Result<Self, IngestError> {
        let mut registry = InstitutionRegistry::default();
        let mut canonicals: HashMap<String, usize> = HashMap::new();
        for (i, entry) in entries.into_iter().enumerate() {
            let invalid = |reason: String| IngestError::InvalidTable { file: "registry", line: i + 2, reason };
            if entry.kind == Business::Unknown {
                return Err(invalid("institution type must not be unknown".into()));
            }
            let key = entry.canonical.trim().to_lowercase();
            if key.is_empty() {
                return Err(invalid("canonical name is empty".into()));
            }
            if let Some(prev) = canonicals.insert(key, i) {
                return Err(invalid(format!("duplicate canonical name (first listed as entry {})", prev + 1)));
            }
            for name in std::iter::once(&entry.canonical).chain(&entry.aliases) {
                let norm = normalize_affiliation(name);
                if norm.is_empty() {
                    continue;
                }
                registry.max_tokens = registry.max_tokens.max(norm.split(' ').count());
                registry.names.entry(norm).or_insert(i);
            }
            registry.entries.push(entry);
        }
        Ok(registry)
    }

    /// Loads the CSV form. Invalid rows are fatal: the registry is configuration.
    pub fn from_csv<R: Read>(input: R) -> Result<Self, IngestError> {
        let table = read_table(input, "registry", &REGISTRY_HEADER)?;
        let mut entries = Vec::with_capacity(table.rows.len());
        for row in &table.rows {
            let invalid = |reason: String| IngestError::InvalidTable { file: "registry", line: row.line, reason };
            let cells = row.cells.as_ref().map_err(|e| invalid(e.clone()))?;
            let cell = |i| Row::cell(cells, i);
            let kind: Business =
                cell(2).parse().map_err(|_| invalid(format!("unknown institution type `{}`", cell(2))))?;
            let country = match cell(3) {
                "" => None,
                c => Some(CountryCode::parse(c).map_err(|e| invalid(e.to_string()))?),
            };
            let aliases = cell(1).split('|').map(str::trim).filter(|a| !a.is_empty()).map(str::to_string).collect();
            entries.push(InstitutionRegistryEntry { canonical: cell(0).to_string(), aliases, kind, country });
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[InstitutionRegistryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, raw: &str) -> Resolution {
        let segment = first_segment(raw);
        let norm = normalize_affiliation(segment);
        if norm.is_empty() {
            return Resolution::none();
        }

        if let Some(&i) = self.names.get(&norm) {
            return self.hit(i, MatchKind::Exact, segment);
        }

        // Every contiguous token run up to the longest alias length.
        let tokens: Vec<&str> = norm.split(' ').collect();
        let mut best: Option<(usize, usize)> = None; // (char length, entry)
        for start in 0..tokens.len() {
            let mut candidate = String::new();
            for (k, tok) in tokens[start..].iter().enumerate().take(self.max_tokens) {
                if k > 0 {
                    candidate.push(' ');
                }
                candidate.push_str(tok);
                if let Some(&i) = self.names.get(&candidate) {
                    let len = candidate.chars().count();
                    let better = match best {
                        None => true,
                        Some((bl, bi)) => len > bl || (len == bl && i < bi),
                    };
                    if better {
                        best = Some((len, i));
                    }
                }
            }
        }
        if let Some((_, i)) = best {
            return self.hit(i, MatchKind::Substring, segment);
        }

        match country_suffix(segment) {
            Some(c) => Resolution {
                business: Business::Unknown,
                country: Some(c),
                match_kind: MatchKind::CountrySuffix,
                institution: None,
            },
            None => Resolution::none(),
        }
    }

    fn hit(&self, i: usize, kind: MatchKind, segment: &str) -> Resolution {
        let e = &self.entries[i];
        Resolution {
            business: e.kind,
            country: e.country.or_else(|| country_suffix(segment)),
            match_kind: kind,
            institution: Some(e.canonical.clone()),
        }
    }
}

/// Country named by the last comma-separated part, e.g. "Someplace Labs, France".
pub fn country_suffix(segment: &str) -> Option<CountryCode> {
    let (_, tail) = segment.rsplit_once(',')?;
    CountryCode::from_name(tail)
}

pub fn resolve_affiliation(raw: &str, registry: &InstitutionRegistry) -> Resolution {
    registry.resolve(raw)
}
