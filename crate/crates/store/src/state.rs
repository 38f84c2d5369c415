use std::collections::BTreeMap;

use divmeter_core::{Edition, Participation, Venue};
use divmeter_ingest::IngestReport;
use serde::{Deserialize, Serialize};

/// Everything in `public.json`. Revisions are append-only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PublicState {
    pub conferences: BTreeMap<String, ConferenceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConferenceRecord {
    pub name: String,
    pub editions: BTreeMap<i32, Vec<Revision>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Revision {
    pub revision: u32,
    pub edition: Edition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestReport>,
}

/// One revision of an edition as read back from the store.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredEdition {
    pub conference_name: String,
    pub revision: u32,
    pub edition: Edition,
    pub ingest: Option<IngestReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConferenceSummary {
    pub slug: String,
    pub name: String,
    pub editions: Vec<i32>,
}

pub const SNAPSHOT_FORMAT: &str = "divmeter-public-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

/// The exported public data set: latest revision of every edition, with its
/// report. Described by `docs/public-snapshot.schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicSnapshot {
    pub format: String,
    pub version: u32,
    pub conferences: Vec<SnapshotConference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotConference {
    pub slug: String,
    pub name: String,
    pub editions: Vec<SnapshotEdition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEdition {
    pub edition_id: String,
    pub year: i32,
    pub revision: u32,
    pub venue: Venue,
    pub participations: Vec<Participation>,
    pub report: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestReport>,
}

impl PublicSnapshot {
    pub fn empty() -> Self {
        Self { format: SNAPSHOT_FORMAT.into(), version: SNAPSHOT_VERSION, conferences: Vec::new() }
    }
}
