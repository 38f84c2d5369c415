//! Parse, enrich and store one edition. Shared by `POST /api/contributions`
//! and `divmeter ingest`.

use divmeter_core::EditionId;
use divmeter_ingest::{
    assemble_edition, parse_affiliations, parse_annotations, parse_dblp, GenderProvider, IngestOptions, IngestReport,
    InstitutionRegistry, Sources,
};
use divmeter_store::Store;
use serde::Serialize;

use crate::error::{ApiError, ErrorKind};

/// Everything that stays fixed across submissions.
pub struct Pipeline {
    pub registry: InstitutionRegistry,
    pub provider: Option<Box<dyn GenderProvider>>,
    pub options: IngestOptions,
}

/// Raw input files for one edition.
#[derive(Debug, Clone, Copy, Default)]
pub struct Submission<'a> {
    pub conference: &'a str,
    pub year: i32,
    pub conference_name: Option<&'a str>,
    pub dblp: Option<&'a [u8]>,
    pub annotations: Option<&'a [u8]>,
    pub affiliations: Option<&'a [u8]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contribution {
    pub edition_id: EditionId,
    pub revision: u32,
    pub ingest_report: IngestReport,
}

pub fn contribute(store: &Store, pipeline: &Pipeline, submission: Submission<'_>) -> Result<Contribution, ApiError> {
    let pseudonymizer = store.pseudonymizer().ok_or_else(|| ApiError::from(divmeter_store::StoreError::VaultLocked))?;
    if submission.dblp.is_none() && submission.annotations.is_none() {
        return Err(ApiError::new(
            ErrorKind::Unprocessable,
            "empty_payload",
            "nothing to ingest: no DBLP or annotation data",
        ));
    }

    let mut skipped = Vec::new();
    let records = match submission.dblp {
        Some(xml) => {
            let parsed = parse_dblp(xml)?;
            skipped.extend(parsed.skipped);
            parsed.records
        }
        None => Vec::new(),
    };
    let drafts = match submission.annotations {
        Some(csv) => {
            let parsed = parse_annotations(csv)?;
            skipped.extend(parsed.bad_rows);
            parsed.drafts
        }
        None => Vec::new(),
    };
    let affiliations = match submission.affiliations {
        Some(csv) => {
            let mut table = parse_affiliations(csv)?;
            skipped.append(&mut table.bad_rows);
            Some(table)
        }
        None => None,
    };

    let outcome = assemble_edition(
        Sources { records: &records, drafts: &drafts, affiliations: affiliations.as_ref(), skipped },
        &pipeline.registry,
        pipeline.provider.as_deref(),
        &pseudonymizer,
        submission.conference,
        submission.year,
        &pipeline.options,
    )?;
    let report = outcome.report;
    let receipt =
        store.put_edition_named(outcome.edition, outcome.vault, Some(report.clone()), submission.conference_name)?;
    Ok(Contribution { edition_id: receipt.edition_id, revision: receipt.revision, ingest_report: report })
}
