//! Hand-annotated participation files and per-author affiliation tables.
//!
//! Annotation files have one row per (person, role):
//!
//! ```text
//! conference,year,role,name,affiliation,affiliation2,gender,business,country
//! ```
//!
//! Extra trailing columns are allowed; a `declared_gender` column carries a
//! person's own gender statement. Empty label cells mean "unknown". Rows
//! that fail validation are skipped and reported.

use std::collections::HashMap;
use std::io::Read;

use divmeter_core::model::validate_slug;
use divmeter_core::{
    normalize_name, Business, BusinessLabel, CountryCode, CountryLabel, Gender, GenderLabel, Label, Role,
    SelfDeclaration,
};

use crate::csvio::{read_table, Row};
use crate::error::{IngestError, Skipped};

pub const ANNOTATION_HEADER: [&str; 9] =
    ["conference", "year", "role", "name", "affiliation", "affiliation2", "gender", "business", "country"];
pub const DECLARED_GENDER_COLUMN: &str = "declared_gender";
pub const AFFILIATION_HEADER: [&str; 2] = ["name", "affiliation"];

/// One validated annotation row, still carrying the person's name.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationDraft {
    pub line: usize,
    pub conference: String,
    pub year: i32,
    pub role: Role,
    pub name: String,
    /// In listed order; only the first one is used for indexing.
    pub affiliations: Vec<String>,
    pub gender: GenderLabel,
    pub business: BusinessLabel,
    pub country: CountryLabel,
    pub declared_gender: Option<SelfDeclaration>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationParse {
    pub drafts: Vec<ParticipationDraft>,
    pub bad_rows: Vec<Skipped>,
}

fn bad(source: &str, line: usize, reason: impl Into<String>) -> Skipped {
    Skipped { source: source.into(), line: Some(line), key: None, reason: reason.into() }
}

pub fn parse_annotations<R: Read>(input: R) -> Result<AnnotationParse, IngestError> {
    let table = read_table(input, "annotations", &ANNOTATION_HEADER)?;
    let declared_col = table.column(DECLARED_GENDER_COLUMN);
    let mut out = AnnotationParse::default();
    for row in &table.rows {
        match draft_from_row(row, declared_col) {
            Ok(d) => out.drafts.push(d),
            Err(s) => out.bad_rows.push(s),
        }
    }
    Ok(out)
}

fn draft_from_row(row: &Row, declared_col: Option<usize>) -> Result<ParticipationDraft, Skipped> {
    let line = row.line;
    let cells = row.cells.as_ref().map_err(|e| bad("annotations", line, e.clone()))?;
    if cells.len() < ANNOTATION_HEADER.len() {
        return Err(bad(
            "annotations",
            line,
            format!("expected {} columns, found {}", ANNOTATION_HEADER.len(), cells.len()),
        ));
    }
    let cell = |i: usize| Row::cell(cells, i);

    let conference = cell(0).to_ascii_lowercase();
    validate_slug(&conference).map_err(|_| bad("annotations", line, "invalid conference slug"))?;
    let year = match cell(1) {
        y if y.len() == 4 && y.bytes().all(|b| b.is_ascii_digit()) => y.parse::<i32>().expect("four digits"),
        _ => return Err(bad("annotations", line, "year is not a four-digit year")),
    };
    let role: Role = cell(2).parse().map_err(|_| bad("annotations", line, format!("unknown role `{}`", cell(2))))?;
    let name = cell(3).split_whitespace().collect::<Vec<_>>().join(" ");
    if name.is_empty() {
        return Err(bad("annotations", line, "name is empty"));
    }
    let affiliations: Vec<String> =
        [cell(4), cell(5)].into_iter().filter(|a| !a.is_empty()).map(str::to_string).collect();

    let gender = match cell(6) {
        "" => Label::unknown(),
        g => Label::manual(g.parse::<Gender>().map_err(|_| bad("annotations", line, format!("unknown gender `{g}`")))?),
    };
    let business = match cell(7) {
        "" => Label::unknown(),
        b => Label::manual(
            b.parse::<Business>().map_err(|_| bad("annotations", line, format!("unknown institution type `{b}`")))?,
        ),
    };
    let country = match cell(8) {
        "" => Label::unknown(),
        c if c.eq_ignore_ascii_case("unknown") => Label::unknown(),
        c => Label::manual(Some(
            CountryCode::parse(c).map_err(|_| bad("annotations", line, format!("InvalidCountryCode: `{c}`")))?,
        )),
    };
    let declared_gender = match declared_col.map(cell) {
        None | Some("") => None,
        Some(d) => Some(
            d.parse::<SelfDeclaration>()
                .map_err(|_| bad("annotations", line, format!("unknown self-declaration `{d}`")))?,
        ),
    };

    Ok(ParticipationDraft {
        line,
        conference,
        year,
        role,
        name,
        affiliations,
        gender,
        business,
        country,
        declared_gender,
    })
}

/// Affiliations keyed by normalized person name, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffiliationTable {
    by_name: HashMap<String, Vec<String>>,
    pub bad_rows: Vec<Skipped>,
}

impl AffiliationTable {
    pub fn get(&self, name: &str) -> &[String] {
        self.by_name.get(&normalize_name(name)).map_or(&[], Vec::as_slice)
    }

    pub fn insert(&mut self, name: &str, affiliation: impl Into<String>) {
        self.by_name.entry(normalize_name(name)).or_default().push(affiliation.into());
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }
}

/// Reads a `name,affiliation` table. Repeated names append further affiliations.
pub fn parse_affiliations<R: Read>(input: R) -> Result<AffiliationTable, IngestError> {
    let table = read_table(input, "affiliations", &AFFILIATION_HEADER)?;
    let mut out = AffiliationTable::default();
    for row in &table.rows {
        let cells = match &row.cells {
            Ok(c) => c,
            Err(e) => {
                out.bad_rows.push(bad("affiliations", row.line, e.clone()));
                continue;
            }
        };
        let (name, affiliation) = (Row::cell(cells, 0), Row::cell(cells, 1));
        if name.is_empty() || affiliation.is_empty() {
            out.bad_rows.push(bad("affiliations", row.line, "name or affiliation is empty"));
            continue;
        }
        out.insert(name, affiliation);
    }
    Ok(out)
}
