//! Merging parsed sources into one edition.
//!
//! People are keyed by (pseudonym, role). For each person the first
//! affiliation is resolved against the registry and, unless a manual label
//! or a self-declaration exists, gender is inferred by the provider.
//! Precedence is self-declared > manual > inferred.

use std::collections::{BTreeMap, HashMap};

use divmeter_core::{
    apply_self_declaration, Business, CountryCode, Edition, EditionId, Facet, Gender, Label, LabelSource,
    Participation, PersonId, Pseudonymizer, Role, SelfDeclaration, VaultEntry, Venue,
};
use serde::{Deserialize, Serialize};

use crate::annotations::{AffiliationTable, ParticipationDraft};
use crate::dblp::RawPaperRecord;
use crate::error::{IngestError, Skipped};
use crate::gender::{infer_gender, GenderProvider, ProviderError, DEFAULT_THRESHOLD};
use crate::registry::{InstitutionRegistry, MatchKind};

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    /// Minimum provider confidence for an inferred gender label.
    pub gender_threshold: f64,
    pub venue: Venue,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { gender_threshold: DEFAULT_THRESHOLD, venue: Venue::Unknown }
    }
}

/// Parsed inputs for one (conference, year).
#[derive(Debug, Clone, Default)]
pub struct Sources<'a> {
    pub records: &'a [RawPaperRecord],
    pub drafts: &'a [ParticipationDraft],
    pub affiliations: Option<&'a AffiliationTable>,
    /// Items the parsers already dropped; carried into the report.
    pub skipped: Vec<Skipped>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub known: u64,
    pub total: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderFailure {
    pub person_id: PersonId,
    pub provider: String,
    pub message: String,
}

/// What happened during ingestion. Contains no names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub edition_id: EditionId,
    pub participations: usize,
    pub coverage: BTreeMap<Role, BTreeMap<Facet, Coverage>>,
    pub affiliation_matches: BTreeMap<MatchKind, u64>,
    pub skipped: Vec<Skipped>,
    pub provider_failures: Vec<ProviderFailure>,
}

impl IngestReport {
    pub fn coverage_of(edition: &Edition) -> BTreeMap<Role, BTreeMap<Facet, Coverage>> {
        let mut tallies: BTreeMap<Role, (u64, [u64; 3])> = BTreeMap::new();
        for p in edition.participations() {
            let t = tallies.entry(p.role).or_default();
            t.0 += 1;
            t.1[0] += u64::from(p.gender.is_known());
            t.1[1] += u64::from(p.business.is_known());
            t.1[2] += u64::from(p.country.is_known());
        }
        tallies
            .into_iter()
            .map(|(role, (total, known))| {
                let per_facet = Facet::ALL
                    .into_iter()
                    .zip(known)
                    .map(|(f, k)| (f, Coverage { known: k, total, fraction: k as f64 / total as f64 }))
                    .collect();
                (role, per_facet)
            })
            .collect()
    }
}

pub struct IngestOutcome {
    pub edition: Edition,
    pub report: IngestReport,
    /// Protected name records, one per person, sorted by id.
    pub vault: Vec<VaultEntry>,
}

struct Person {
    person_id: PersonId,
    role: Role,
    name: String,
    /// Name plus DBLP homonym tag, when there is one.
    identity: String,
    affiliations: Vec<String>,
    gender: Option<(Gender, String)>,
    business: Option<(Business, String)>,
    country: Option<(CountryCode, String)>,
    declared: Option<(SelfDeclaration, String)>,
}

impl Person {
    fn new(person_id: PersonId, role: Role, name: &str, identity: &str) -> Self {
        Self {
            person_id,
            role,
            name: name.to_string(),
            identity: identity.to_string(),
            affiliations: Vec::new(),
            gender: None,
            business: None,
            country: None,
            declared: None,
        }
    }
}

fn merge_manual<T: PartialEq + std::fmt::Debug>(
    slot: &mut Option<(T, String)>,
    value: T,
    origin: String,
    (person, role): (&PersonId, Role),
    facet: Facet,
) -> Result<(), IngestError> {
    match slot {
        Some((existing, first)) if *existing != value => Err(IngestError::ConflictingManualLabels {
            person: person.clone(),
            role,
            facet,
            first: format!("{first} ({existing:?})"),
            second: format!("{origin} ({value:?})"),
        }),
        Some(_) => Ok(()),
        None => {
            *slot = Some((value, origin));
            Ok(())
        }
    }
}

fn provider_message(e: &ProviderError) -> &'static str {
    match e {
        ProviderError::Unavailable(_) => "provider unavailable",
        ProviderError::BadResponse(_) => "unusable provider answer",
    }
}

/// Builds the edition for `conference_slug`/`year` from all sources.
///
/// Records and rows for other editions are skipped and reported. Two
/// different manual labels for the same person and role abort the run.
pub fn assemble_edition(
    sources: Sources<'_>,
    registry: &InstitutionRegistry,
    provider: Option<&dyn GenderProvider>,
    pseudonymizer: &Pseudonymizer,
    conference_slug: &str,
    year: i32,
    options: &IngestOptions,
) -> Result<IngestOutcome, IngestError> {
    let mut edition =
        Edition::new(conference_slug, year, options.venue).map_err(|e| IngestError::InvalidEdition(e.to_string()))?;
    let edition_id = edition.id();
    let mut skipped = sources.skipped;

    let mut people: Vec<Person> = Vec::new();
    let mut index: HashMap<(PersonId, Role), usize> = HashMap::new();
    let mut slot = |people: &mut Vec<Person>, role: Role, name: &str, identity: &str| -> usize {
        let pid = pseudonymizer.person_id(identity);
        *index.entry((pid.clone(), role)).or_insert_with(|| {
            people.push(Person::new(pid, role, name, identity));
            people.len() - 1
        })
    };

    for record in sources.records {
        if record.year != year {
            skipped.push(Skipped {
                source: "dblp".into(),
                line: None,
                key: record.key.clone(),
                reason: format!("record year {} does not match edition year {year}", record.year),
            });
            continue;
        }
        for author in &record.authors {
            let identity = match &author.disambiguation {
                Some(tag) => format!("{} {tag}", author.name),
                None => author.name.clone(),
            };
            slot(&mut people, Role::Author, &author.name, &identity);
        }
    }

    for draft in sources.drafts {
        if draft.conference != conference_slug || draft.year != year {
            skipped.push(Skipped {
                source: "annotations".into(),
                line: Some(draft.line),
                key: None,
                reason: format!("row belongs to {}-{}, not {edition_id}", draft.conference, draft.year),
            });
            continue;
        }
        let i = slot(&mut people, draft.role, &draft.name, &draft.name);
        let person = &mut people[i];
        let origin = format!("annotations line {}", draft.line);
        if person.affiliations.is_empty() {
            person.affiliations = draft.affiliations.clone();
        }
        let who = (&person.person_id, person.role);
        if let Some(&g) = draft.gender.is_known().then_some(draft.gender.value()) {
            merge_manual(&mut person.gender, g, origin.clone(), who, Facet::Gender)?;
        }
        if let Some(&b) = draft.business.is_known().then_some(draft.business.value()) {
            merge_manual(&mut person.business, b, origin.clone(), who, Facet::Business)?;
        }
        if let Some(c) = *draft.country.value() {
            merge_manual(&mut person.country, c, origin.clone(), who, Facet::Geography)?;
        }
        if let Some(d) = &draft.declared_gender {
            merge_manual(&mut person.declared, d.clone(), origin, who, Facet::Gender)?;
        }
    }

    if people.is_empty() {
        return Err(IngestError::InvalidEdition(format!("no participations for {edition_id}")));
    }
    people.sort_by(|a, b| (a.role, &a.person_id).cmp(&(b.role, &b.person_id)));

    let mut vault: BTreeMap<PersonId, VaultEntry> = BTreeMap::new();
    let mut matches: BTreeMap<MatchKind, u64> = BTreeMap::new();
    let mut failures = Vec::new();

    for person in people {
        let mut affiliations = person.affiliations.clone();
        if affiliations.is_empty() {
            if let Some(table) = sources.affiliations {
                affiliations = table.get(&person.identity).to_vec();
                if affiliations.is_empty() {
                    affiliations = table.get(&person.name).to_vec();
                }
            }
        }
        let mut p = Participation::new(person.person_id.clone(), edition_id.clone(), person.role);
        let mut entry = VaultEntry::new(person.person_id.clone(), person.name.clone());

        if let Some(first) = affiliations.first() {
            p.affiliation_raw = first.clone();
            p.other_affiliations = affiliations[1..].to_vec();
            let r = registry.resolve(first);
            *matches.entry(r.match_kind).or_insert(0) += 1;
            if r.business != Business::Unknown {
                p.business = Label::inferred(r.business, 1.0);
            }
            if r.country.is_some() {
                p.country = Label::inferred(r.country, 1.0);
            }
        }
        if let Some((b, _)) = person.business {
            p.business.offer(Label::manual(b));
        }
        if let Some((c, _)) = person.country {
            p.country.offer(Label::manual(Some(c)));
        }

        if let Some((d, _)) = &person.declared {
            p = apply_self_declaration(p, Some(d));
            entry.self_declaration = Some(d.clone());
        } else if let Some((g, _)) = person.gender {
            p.gender = Label::manual(g);
        } else if let Some(provider) = provider {
            let inference = infer_gender(&person.name, provider, options.gender_threshold, *p.country.value());
            if let Some(raw) = inference.raw {
                entry.provider_responses.push(format!("{}: {raw}", provider.name()));
            }
            if let Some(e) = inference.failure {
                entry.provider_responses.push(format!("{}: error: {e}", provider.name()));
                failures.push(ProviderFailure {
                    person_id: person.person_id.clone(),
                    provider: provider.name().to_string(),
                    message: provider_message(&e).to_string(),
                });
            }
            p.gender.offer(inference.label);
        }

        for (facet, source) in [
            (Facet::Gender, p.gender.source()),
            (Facet::Business, p.business.source()),
            (Facet::Geography, p.country.source()),
        ] {
            if source != LabelSource::Unknown {
                entry.label_sources.insert(format!("{}.{}", person.role, facet), source);
            }
        }
        match vault.get_mut(&person.person_id) {
            Some(existing) => existing.merge(entry),
            None => {
                vault.insert(person.person_id.clone(), entry);
            }
        }
        edition.push(p).expect("participation built for this edition");
    }

    let report = IngestReport {
        edition_id,
        participations: edition.participations().len(),
        coverage: IngestReport::coverage_of(&edition),
        affiliation_matches: matches,
        skipped,
        provider_failures: failures,
    };
    Ok(IngestOutcome { edition, report, vault: vault.into_values().collect() })
}
