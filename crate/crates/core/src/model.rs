//! Conferences, editions, participations and the labels attached to them.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::country::CountryCode;
use crate::indices::{CategorySpace, FacetDistribution, RoleFacetMatrix};
use crate::privacy::PersonId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("edition has no participations")]
    EmptyEdition,
    #[error("`{0}` is not an accepted self-declaration (woman, man, non-binary, prefer-not-to-say, other:<text>)")]
    UnknownVocabularyTerm(String),
    #[error("invalid conference slug `{0}`")]
    InvalidSlug(String),
    #[error("year {0} is not a four-digit year")]
    InvalidYear(i32),
    #[error("participation belongs to edition {found}, not {expected}")]
    ForeignParticipation { expected: EditionId, found: EditionId },
    #[error("invalid label: {0}")]
    InvalidLabel(&'static str),
    #[error("unknown {kind} `{value}`")]
    UnknownTerm { kind: &'static str, value: String },
}

/// The three community roles. Organizers include technical committee members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Keynote,
    Organizer,
    Author,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Keynote, Role::Organizer, Role::Author];

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Keynote => "keynote",
            Role::Organizer => "organizer",
            Role::Author => "author",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "keynote" | "keynote speaker" | "speaker" => Ok(Role::Keynote),
            "organizer" | "organiser" | "committee" | "pc" => Ok(Role::Organizer),
            "author" => Ok(Role::Author),
            _ => Err(ModelError::UnknownTerm { kind: "role", value: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Facet {
    Gender,
    Business,
    Geography,
}

impl Facet {
    pub const ALL: [Facet; 3] = [Facet::Gender, Facet::Business, Facet::Geography];

    pub fn as_str(&self) -> &'static str {
        match self {
            Facet::Gender => "gender",
            Facet::Business => "business",
            Facet::Geography => "geography",
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a label came from, in increasing order of authority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelSource {
    Unknown,
    Inferred,
    Manual,
    SelfDeclared,
}

/// A value that may be unknown and maps to a category id when known.
pub trait Category: Clone + PartialEq {
    fn unknown() -> Self;
    fn category_id(&self) -> Option<&str>;

    fn is_known(&self) -> bool {
        self.category_id().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Woman,
    Man,
    Unknown,
}

impl Category for Gender {
    fn unknown() -> Self {
        Gender::Unknown
    }

    fn category_id(&self) -> Option<&str> {
        match self {
            Gender::Woman => Some("woman"),
            Gender::Man => Some("man"),
            Gender::Unknown => None,
        }
    }
}

impl FromStr for Gender {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "woman" | "women" | "female" | "w" | "f" => Ok(Gender::Woman),
            "man" | "men" | "male" | "m" => Ok(Gender::Man),
            "unknown" | "" => Ok(Gender::Unknown),
            _ => Err(ModelError::UnknownTerm { kind: "gender", value: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Business {
    Academia,
    Industry,
    ResearchCentre,
    Unknown,
}

impl Category for Business {
    fn unknown() -> Self {
        Business::Unknown
    }

    fn category_id(&self) -> Option<&str> {
        match self {
            Business::Academia => Some("academia"),
            Business::Industry => Some("industry"),
            Business::ResearchCentre => Some("research_centre"),
            Business::Unknown => None,
        }
    }
}

impl FromStr for Business {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String =
            s.trim().to_ascii_lowercase().chars().map(|c| if c == ' ' || c == '-' { '_' } else { c }).collect();
        match key.as_str() {
            "academia" | "academic" | "university" => Ok(Business::Academia),
            "industry" | "company" => Ok(Business::Industry),
            "research_centre" | "research_center" | "research" => Ok(Business::ResearchCentre),
            "unknown" | "" => Ok(Business::Unknown),
            _ => Err(ModelError::UnknownTerm { kind: "institution type", value: s.to_string() }),
        }
    }
}

impl Category for Option<CountryCode> {
    fn unknown() -> Self {
        None
    }

    fn category_id(&self) -> Option<&str> {
        self.as_ref().map(CountryCode::as_str)
    }
}

/// A categorical label with its provenance.
///
/// An unknown source always carries an unknown value, and self-declared
/// labels always carry confidence 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLabel<T>", bound(deserialize = "T: Category + Deserialize<'de>"))]
pub struct Label<T> {
    value: T,
    source: LabelSource,
    confidence: f64,
}

#[derive(Deserialize)]
struct RawLabel<T> {
    value: T,
    source: LabelSource,
    confidence: f64,
}

impl<T: Category> TryFrom<RawLabel<T>> for Label<T> {
    type Error = ModelError;

    fn try_from(raw: RawLabel<T>) -> Result<Self, Self::Error> {
        Label::new(raw.value, raw.source, raw.confidence)
    }
}

pub type GenderLabel = Label<Gender>;
pub type BusinessLabel = Label<Business>;
pub type CountryLabel = Label<Option<CountryCode>>;

impl<T: Category> Label<T> {
    pub fn new(value: T, source: LabelSource, confidence: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(ModelError::InvalidLabel("confidence outside [0, 1]"));
        }
        if source == LabelSource::Unknown && value.is_known() {
            return Err(ModelError::InvalidLabel("unknown source with a known value"));
        }
        if source == LabelSource::SelfDeclared && confidence != 1.0 {
            return Err(ModelError::InvalidLabel("self-declared label with confidence below 1"));
        }
        Ok(Self { value, source, confidence })
    }

    pub fn unknown() -> Self {
        Self { value: T::unknown(), source: LabelSource::Unknown, confidence: 0.0 }
    }

    /// A hand-annotated label; an unknown value yields [`Label::unknown`].
    pub fn manual(value: T) -> Self {
        if value.is_known() {
            Self { value, source: LabelSource::Manual, confidence: 1.0 }
        } else {
            Self::unknown()
        }
    }

    pub fn inferred(value: T, confidence: f64) -> Self {
        Self { value, source: LabelSource::Inferred, confidence: confidence.clamp(0.0, 1.0) }
    }

    pub fn self_declared(value: T) -> Self {
        Self { value, source: LabelSource::SelfDeclared, confidence: 1.0 }
    }

    pub fn value(&self) -> &T {
        &self.value
    }

    pub fn source(&self) -> LabelSource {
        self.source
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn is_known(&self) -> bool {
        self.value.is_known()
    }

    /// Replaces this label with `candidate` if the candidate has a more
    /// authoritative source, or the same source and this label is unknown.
    /// Returns whether the label changed.
    pub fn offer(&mut self, candidate: Label<T>) -> bool {
        let wins = candidate.source > self.source
            || (candidate.source == self.source && !self.is_known() && candidate.is_known());
        if wins {
            *self = candidate;
        }
        wins
    }
}

/// A person's own statement of gender.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SelfDeclaration {
    Woman,
    Man,
    NonBinary,
    PreferNotToSay,
    Other(String),
}

impl SelfDeclaration {
    /// The label used for indexing; only woman and man map into the index space.
    pub fn index_gender(&self) -> Gender {
        match self {
            SelfDeclaration::Woman => Gender::Woman,
            SelfDeclaration::Man => Gender::Man,
            _ => Gender::Unknown,
        }
    }
}

impl fmt::Display for SelfDeclaration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelfDeclaration::Woman => f.write_str("woman"),
            SelfDeclaration::Man => f.write_str("man"),
            SelfDeclaration::NonBinary => f.write_str("non-binary"),
            SelfDeclaration::PreferNotToSay => f.write_str("prefer-not-to-say"),
            SelfDeclaration::Other(text) => write!(f, "other:{text}"),
        }
    }
}

impl FromStr for SelfDeclaration {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some((head, text)) = t.split_once(':') {
            if head.trim().eq_ignore_ascii_case("other") && !text.trim().is_empty() {
                return Ok(SelfDeclaration::Other(text.trim().to_string()));
            }
            return Err(ModelError::UnknownVocabularyTerm(s.to_string()));
        }
        match t.to_ascii_lowercase().as_str() {
            "woman" => Ok(SelfDeclaration::Woman),
            "man" => Ok(SelfDeclaration::Man),
            "non-binary" | "nonbinary" => Ok(SelfDeclaration::NonBinary),
            "prefer-not-to-say" => Ok(SelfDeclaration::PreferNotToSay),
            _ => Err(ModelError::UnknownVocabularyTerm(s.to_string())),
        }
    }
}

impl From<SelfDeclaration> for String {
    fn from(d: SelfDeclaration) -> String {
        d.to_string()
    }
}

impl TryFrom<String> for SelfDeclaration {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// `<slug>-<year>`, e.g. `toyconf-2021`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EditionId(String);

impl EditionId {
    pub fn new(conference_slug: &str, year: i32) -> Self {
        EditionId(format!("{conference_slug}-{year}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn conference_slug(&self) -> &str {
        self.0.rsplit_once('-').map_or("", |(slug, _)| slug)
    }

    pub fn year(&self) -> i32 {
        self.0.rsplit_once('-').and_then(|(_, y)| y.parse().ok()).unwrap_or(0)
    }
}

impl FromStr for EditionId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (slug, year) = s.rsplit_once('-').ok_or_else(|| ModelError::InvalidSlug(s.to_string()))?;
        validate_slug(slug)?;
        match year.parse::<i32>() {
            Ok(y) if year.len() == 4 && (1000..=9999).contains(&y) => Ok(EditionId::new(slug, y)),
            _ => Err(ModelError::InvalidYear(year.parse().unwrap_or(0))),
        }
    }
}

impl fmt::Display for EditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participation {
    pub person_id: PersonId,
    pub edition_id: EditionId,
    pub role: Role,
    pub gender: GenderLabel,
    pub business: BusinessLabel,
    pub country: CountryLabel,
    /// The affiliation string the indexed labels were derived from.
    pub affiliation_raw: String,
    /// 1-based position of `affiliation_raw` among the person's affiliations.
    pub position: u32,
    /// Further affiliations, kept for audit only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub other_affiliations: Vec<String>,
}

impl Participation {
    pub fn new(person_id: PersonId, edition_id: EditionId, role: Role) -> Self {
        Self {
            person_id,
            edition_id,
            role,
            gender: Label::unknown(),
            business: Label::unknown(),
            country: Label::unknown(),
            affiliation_raw: String::new(),
            position: 1,
            other_affiliations: Vec::new(),
        }
    }
}

/// Applies a person's own gender statement, which outranks every other source.
///
/// Statements outside {woman, man} index as unknown; the caller keeps the
/// verbatim statement in the vault.
pub fn apply_self_declaration(mut participation: Participation, declared: Option<&SelfDeclaration>) -> Participation {
    if let Some(d) = declared {
        participation.gender = Label::self_declared(d.index_gender());
    }
    participation
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Venue {
    Physical(CountryCode),
    Virtual,
    Unknown,
}

/// One year's instance of a conference series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edition {
    conference_slug: String,
    year: i32,
    venue: Venue,
    participations: Vec<Participation>,
}

/// Lower-case ASCII letters, digits and inner hyphens.
pub fn validate_slug(slug: &str) -> Result<(), ModelError> {
    let ok = !slug.is_empty()
        && slug.len() <= 64
        && slug.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
        && !slug.starts_with('-')
        && !slug.ends_with('-');
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidSlug(slug.to_string()))
    }
}

impl Edition {
    pub fn new(conference_slug: impl Into<String>, year: i32, venue: Venue) -> Result<Self, ModelError> {
        let conference_slug = conference_slug.into();
        validate_slug(&conference_slug)?;
        if !(1000..=9999).contains(&year) {
            return Err(ModelError::InvalidYear(year));
        }
        Ok(Self { conference_slug, year, venue, participations: Vec::new() })
    }

    pub fn id(&self) -> EditionId {
        EditionId::new(&self.conference_slug, self.year)
    }

    pub fn conference_slug(&self) -> &str {
        &self.conference_slug
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn venue(&self) -> Venue {
        self.venue
    }

    pub fn participations(&self) -> &[Participation] {
        &self.participations
    }

    pub fn push(&mut self, participation: Participation) -> Result<(), ModelError> {
        let expected = self.id();
        if participation.edition_id != expected {
            return Err(ModelError::ForeignParticipation { expected, found: participation.edition_id });
        }
        self.participations.push(participation);
        Ok(())
    }
}

/// Tallies known labels per (role, facet).
///
/// A person holding the same role twice in one edition counts once; the
/// first record wins. Entries with no known label are left out, and each
/// role's participant count is recorded for coverage.
pub fn build_matrix(edition: &Edition) -> Result<RoleFacetMatrix, ModelError> {
    if edition.participations.is_empty() {
        return Err(ModelError::EmptyEdition);
    }
    let mut seen: HashSet<(&PersonId, Role)> = HashSet::new();
    let mut dists: BTreeMap<(Role, Facet), FacetDistribution> = BTreeMap::new();
    let mut participants: BTreeMap<Role, u64> = BTreeMap::new();

    for p in &edition.participations {
        if !seen.insert((&p.person_id, p.role)) {
            continue;
        }
        *participants.entry(p.role).or_insert(0) += 1;
        let labels = [
            (Facet::Gender, p.gender.value().category_id()),
            (Facet::Business, p.business.value().category_id()),
            (Facet::Geography, p.country.value().category_id()),
        ];
        for (facet, category) in labels {
            if let Some(category) = category {
                dists
                    .entry((p.role, facet))
                    .or_insert_with(|| FacetDistribution::new(CategorySpace::for_facet(facet)))
                    .add(category, 1)
                    .expect("label categories belong to their facet's space");
            }
        }
    }

    let mut matrix = RoleFacetMatrix::new();
    for ((role, facet), dist) in dists {
        matrix.insert(role, facet, dist);
    }
    for (role, n) in participants {
        matrix.set_participants(role, n);
    }
    Ok(matrix)
}
