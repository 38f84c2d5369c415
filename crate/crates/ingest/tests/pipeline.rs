use divmeter_core::model::Category;
use divmeter_core::{CountryCode, Facet, Gender, LabelSource, Pseudonymizer, Role, VaultKey};
use divmeter_ingest::{
    assemble_edition, parse_affiliations, parse_annotations, AuthorName, GenderProvider, IngestOptions,
    InstitutionRegistry, LexiconProvider, ProviderAnswer, ProviderError, RawPaperRecord, Sources,
};
use proptest::prelude::*;

const REGISTRY: &str = "canonical,aliases,type,country\n\
    Massachusetts Institute of Technology,MIT,academia,US\n\
    Acme Research,Acme,industry,DE\n\
    Institut National de Recherche en Informatique,Inria,research_centre,FR\n";

const LEXICON: &str = "given_name,category,confidence\nAna,woman,0.99\nBo,man,0.55\nCarl,man,0.9\nDana,woman,0.8\n";

const GIVEN: [&str; 5] = ["Ana", "Bo", "Carl", "Dana", "Eli"];
const AFFILIATIONS: [&str; 6] = ["MIT", "Acme; MIT", "Inria, Paris", "Nowhere Lab, Japan", "Unknown Place", ""];

fn pseudonymizer() -> Pseudonymizer {
    VaultKey::from_secret("pipeline-tests").unwrap().pseudonymizer()
}

fn registry() -> InstitutionRegistry {
    InstitutionRegistry::from_csv(REGISTRY.as_bytes()).unwrap()
}

fn lexicon() -> LexiconProvider {
    LexiconProvider::from_csv(LEXICON.as_bytes()).unwrap()
}

/// (given index, family index, affiliation index) per author.
type PaperSpec = Vec<(usize, u8, usize)>;

fn build_inputs(papers: &[PaperSpec], annotated: &[(usize, u8, u8, bool)]) -> (Vec<RawPaperRecord>, String, String) {
    let name = |g: usize, f: u8| format!("{} Fam{f}", GIVEN[g]);
    let mut records = Vec::new();
    let mut affs = String::from("name,affiliation\n");
    for (n, paper) in papers.iter().enumerate() {
        let authors = paper.iter().map(|&(g, f, _)| AuthorName::parse(&name(g, f))).collect();
        for &(g, f, a) in paper {
            if !AFFILIATIONS[a].is_empty() {
                affs.push_str(&format!("{},\"{}\"\n", name(g, f), AFFILIATIONS[a]));
            }
        }
        records.push(RawPaperRecord {
            key: Some(format!("conf/toy/{n}")),
            title: format!("P{n}"),
            authors,
            venue: "TOY".into(),
            year: 2021,
        });
    }
    let mut csv = String::from("conference,year,role,name,affiliation,affiliation2,gender,business,country\n");
    for &(g, f, role, with_gender) in annotated {
        let role = ["keynote", "organizer", "author"][role as usize % 3];
        // family names >= 100 keep annotated people distinct from authors
        let gender = if with_gender { ["woman", "man"][g % 2] } else { "" };
        csv.push_str(&format!("toyconf,2021,{role},{},MIT,,{gender},,\n", name(g, f + 100)));
    }
    (records, csv, affs)
}

fn run(papers: &[PaperSpec], annotated: &[(usize, u8, u8, bool)]) -> divmeter_ingest::IngestOutcome {
    let (records, csv, affs) = build_inputs(papers, annotated);
    let drafts = parse_annotations(csv.as_bytes()).unwrap().drafts;
    let affs = parse_affiliations(affs.as_bytes()).unwrap();
    assemble_edition(
        Sources { records: &records, drafts: &drafts, affiliations: Some(&affs), skipped: Vec::new() },
        &registry(),
        Some(&lexicon()),
        &pseudonymizer(),
        "toyconf",
        2021,
        &IngestOptions::default(),
    )
    .unwrap()
}

fn papers() -> impl Strategy<Value = Vec<PaperSpec>> {
    proptest::collection::vec(proptest::collection::vec((0..5usize, 0..6u8, 0..6usize), 1..4), 1..8)
}

fn annotated() -> impl Strategy<Value = Vec<(usize, u8, u8, bool)>> {
    proptest::collection::vec((0..5usize, 0..20u8, 0..3u8, any::<bool>()), 0..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identical_inputs_give_identical_editions(p in papers(), a in annotated()) {
        let one = run(&p, &a);
        let two = run(&p, &a);
        prop_assert_eq!(&one.edition, &two.edition);
        prop_assert_eq!(&one.report, &two.report);
        prop_assert_eq!(one.vault, two.vault);
    }

    #[test]
    fn inferred_labels_respect_the_threshold(p in papers(), a in annotated()) {
        let out = run(&p, &a);
        for part in out.edition.participations() {
            if part.gender.source() == LabelSource::Inferred {
                prop_assert!(part.gender.confidence() >= 0.8);
                prop_assert!(part.gender.is_known());
            }
        }
    }

    #[test]
    fn coverage_matches_recount(p in papers(), a in annotated()) {
        let out = run(&p, &a);
        for role in Role::ALL {
            let people: Vec<_> = out.edition.participations().iter().filter(|x| x.role == role).collect();
            if people.is_empty() {
                prop_assert!(!out.report.coverage.contains_key(&role));
                continue;
            }
            for facet in Facet::ALL {
                let known = people.iter().filter(|x| match facet {
                    Facet::Gender => *x.gender.value() != Gender::Unknown,
                    Facet::Business => x.business.value().category_id().is_some(),
                    Facet::Geography => x.country.value().is_some(),
                }).count() as u64;
                let c = out.report.coverage[&role][&facet];
                prop_assert_eq!(c.known, known);
                prop_assert_eq!(c.total, people.len() as u64);
                prop_assert!((c.fraction - known as f64 / people.len() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn only_the_first_affiliation_is_indexed(p in papers()) {
        let out = run(&p, &[]);
        let reg = registry();
        for part in out.edition.participations() {
            let first = part.affiliation_raw.split(';').next().unwrap();
            let r = reg.resolve(first);
            prop_assert_eq!(*part.business.value(), r.business);
            prop_assert_eq!(*part.country.value(), r.country);
        }
    }
}

#[test]
fn second_affiliation_is_recorded_but_not_indexed() {
    let csv = "conference,year,role,name,affiliation,affiliation2,gender,business,country\n\
               toyconf,2021,organizer,Eli Ward,Acme,MIT,,,\n";
    let drafts = parse_annotations(csv.as_bytes()).unwrap().drafts;
    let out = assemble_edition(
        Sources { drafts: &drafts, ..Sources::default() },
        &registry(),
        None,
        &pseudonymizer(),
        "toyconf",
        2021,
        &IngestOptions::default(),
    )
    .unwrap();
    let p = &out.edition.participations()[0];
    assert_eq!(p.affiliation_raw, "Acme");
    assert_eq!(p.other_affiliations, vec!["MIT"]);
    assert_eq!(p.country.value().map(|c| c.as_str().to_string()), Some("DE".into()));
}

struct Down;

impl GenderProvider for Down {
    fn name(&self) -> &str {
        "down"
    }

    fn lookup(&self, _: &str, _: &str, _: Option<CountryCode>) -> Result<ProviderAnswer, ProviderError> {
        Err(ProviderError::Unavailable("connection refused".into()))
    }
}

#[test]
fn provider_outage_is_reported_without_names() {
    let records = [RawPaperRecord {
        key: None,
        title: "T".into(),
        authors: vec![AuthorName::parse("Ana Fam1")],
        venue: "TOY".into(),
        year: 2021,
    }];
    let out = assemble_edition(
        Sources { records: &records, ..Sources::default() },
        &registry(),
        Some(&Down),
        &pseudonymizer(),
        "toyconf",
        2021,
        &IngestOptions::default(),
    )
    .unwrap();
    assert_eq!(out.report.provider_failures.len(), 1);
    assert_eq!(*out.edition.participations()[0].gender.value(), Gender::Unknown);
    let json = serde_json::to_string(&out.report).unwrap();
    assert!(!json.contains("Ana"));
}

#[test]
fn homonyms_stay_apart() {
    let records = [RawPaperRecord {
        key: None,
        title: "T".into(),
        authors: vec![AuthorName::parse("Wei Zhang 0001"), AuthorName::parse("Wei Zhang 0002")],
        venue: "TOY".into(),
        year: 2021,
    }];
    let out = assemble_edition(
        Sources { records: &records, ..Sources::default() },
        &registry(),
        None,
        &pseudonymizer(),
        "toyconf",
        2021,
        &IngestOptions::default(),
    )
    .unwrap();
    assert_eq!(out.edition.participations().len(), 2);
    assert!(out.vault.iter().all(|v| v.full_name == "Wei Zhang"));
}
