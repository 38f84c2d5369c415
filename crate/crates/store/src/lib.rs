//! Edition persistence with a privacy partition.
//!
//! A store is a directory with three files:
//!
//! * `public.json` holds conferences, every revision of every edition
//!   (pseudonymous ids only) and ingest metadata;
//! * `vault.bin` holds names and label provenance, sealed with a key derived
//!   from `DIVMETER_VAULT_KEY`;
//! * `.lock` is held exclusively by the one writer.
//!
//! Data files carry a versioned magic line and are only ever replaced by
//! rename, so a reader sees either the old or the new committed state.
//! The vault is committed before the public file; a crash in between leaves
//! a vault that is a superset of what the public side references.

mod error;
mod files;
mod leak;
mod state;
mod vault;

use std::collections::HashMap;
use std::fs::{File, OpenOptions, TryLockError};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use divmeter_core::{
    build_matrix, diversity_report, DiversityReport, Edition, EditionId, IndexConfig, Pseudonymizer, RoleFacetMatrix,
    VaultEntry, VaultKey,
};
use divmeter_ingest::IngestReport;

pub use error::StoreError;
pub use files::canonical_json;
pub use leak::LeakScanner;
pub use state::{
    ConferenceRecord, ConferenceSummary, PublicSnapshot, PublicState, Revision, SnapshotConference, SnapshotEdition,
    StoredEdition, SNAPSHOT_FORMAT, SNAPSHOT_VERSION,
};

use files::{read_framed, PUBLIC_MAGIC, VAULT_MAGIC};

pub const PUBLIC_FILE: &str = "public.json";
pub const VAULT_FILE: &str = "vault.bin";
const LOCK_FILE: &str = ".lock";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PutReceipt {
    pub edition_id: EditionId,
    pub revision: u32,
}

/// Indices for an edition; an edition without any known label gets a
/// report whose headline values are all undefined.
pub fn compute_report(edition: &Edition, config: &IndexConfig) -> DiversityReport {
    match build_matrix(edition) {
        Ok(matrix) => diversity_report(&matrix, config).unwrap_or_else(|_| DiversityReport::undefined(&matrix)),
        Err(_) => DiversityReport::undefined(&RoleFacetMatrix::default()),
    }
}

pub struct Store {
    dir: PathBuf,
    key: Option<VaultKey>,
    config: IndexConfig,
    // revisions are immutable, so entries never go stale
    reports: Mutex<HashMap<(EditionId, u32), DiversityReport>>,
}

struct WriteLock(File);

impl Drop for WriteLock {
    fn drop(&mut self) {
        let _ = self.0.unlock();
    }
}

impl Store {
    /// Opens an existing store directory.
    pub fn open(dir: impl Into<PathBuf>, key: Option<VaultKey>) -> Result<Self, StoreError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(StoreError::NotFound(format!("store directory {}", dir.display())));
        }
        Ok(Self { dir, key, config: IndexConfig::default(), reports: Mutex::new(HashMap::new()) })
    }

    /// Opens the store, creating the directory first if needed.
    pub fn create(dir: impl Into<PathBuf>, key: Option<VaultKey>) -> Result<Self, StoreError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| StoreError::io(&dir, e))?;
        Self::open(dir, key)
    }

    pub fn with_config(mut self, config: IndexConfig) -> Self {
        self.config = config;
        self
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn is_unlocked(&self) -> bool {
        self.key.is_some()
    }

    /// Pseudonymizer for the vault key, when the vault is unlocked.
    pub fn pseudonymizer(&self) -> Option<Pseudonymizer> {
        self.key.as_ref().map(VaultKey::pseudonymizer)
    }

    fn public_path(&self) -> PathBuf {
        self.dir.join(PUBLIC_FILE)
    }

    fn vault_path(&self) -> PathBuf {
        self.dir.join(VAULT_FILE)
    }

    fn lock(&self) -> Result<WriteLock, StoreError> {
        let path = self.dir.join(LOCK_FILE);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| StoreError::io(&path, e))?;
        match file.try_lock() {
            Ok(()) => Ok(WriteLock(file)),
            Err(TryLockError::WouldBlock) => Err(StoreError::ConflictRetryable),
            Err(TryLockError::Error(e)) => Err(StoreError::io(&path, e)),
        }
    }

    /// The last committed public state; empty when nothing was written yet.
    pub fn load(&self) -> Result<PublicState, StoreError> {
        let path = self.public_path();
        match read_framed(&path, PUBLIC_MAGIC)? {
            None => Ok(PublicState::default()),
            Some(body) => {
                serde_json::from_slice(&body).map_err(|e| StoreError::Corrupt { file: path, reason: e.to_string() })
            }
        }
    }

    /// Decrypted vault contents. A store that never had a vault reads as empty.
    pub fn read_vault(&self) -> Result<Vec<VaultEntry>, StoreError> {
        Ok(self.open_vault()?.into_values().collect())
    }

    fn open_vault(&self) -> Result<vault::Vault, StoreError> {
        let path = self.vault_path();
        match &self.key {
            Some(key) => vault::open(key, &path),
            None if path.exists() => Err(StoreError::VaultLocked),
            None => Ok(vault::Vault::new()),
        }
    }

    /// Stores a new revision of `edition` and merges `vault_entries` into the
    /// vault. Nothing is written unless both halves can be.
    pub fn put_edition(
        &self,
        edition: Edition,
        vault_entries: Vec<VaultEntry>,
        ingest: Option<IngestReport>,
    ) -> Result<PutReceipt, StoreError> {
        self.put_edition_named(edition, vault_entries, ingest, None)
    }

    /// As [`Store::put_edition`], also setting the conference display name.
    /// Without a name a new conference is called by its upper-cased slug.
    pub fn put_edition_named(
        &self,
        edition: Edition,
        vault_entries: Vec<VaultEntry>,
        ingest: Option<IngestReport>,
        conference_name: Option<&str>,
    ) -> Result<PutReceipt, StoreError> {
        let key = self.key.as_ref().ok_or(StoreError::VaultLocked)?;
        let edition_id = edition.id();
        if edition.participations().is_empty() {
            return Err(StoreError::InvalidEdition(format!("{edition_id} has no participations")));
        }
        if let Some(p) = edition.participations().iter().find(|p| p.edition_id != edition_id) {
            return Err(StoreError::InvalidEdition(format!("participation of {} inside {edition_id}", p.edition_id)));
        }

        let _lock = self.lock()?;
        let mut state = self.load()?;
        let mut vault = vault::open(key, &self.vault_path())?;
        for entry in vault_entries {
            match vault.get_mut(&entry.person_id) {
                Some(existing) => existing.merge(entry),
                None => {
                    vault.insert(entry.person_id.clone(), entry);
                }
            }
        }

        let slug = edition.conference_slug().to_string();
        let conference = state
            .conferences
            .entry(slug.clone())
            .or_insert_with(|| ConferenceRecord { name: slug.to_uppercase(), editions: Default::default() });
        if let Some(name) = conference_name.map(str::trim).filter(|n| !n.is_empty()) {
            conference.name = name.to_string();
        }
        let revisions = conference.editions.entry(edition.year()).or_default();
        let revision = revisions.last().map_or(1, |r| r.revision + 1);
        revisions.push(Revision { revision, edition, ingest });

        self.commit(key, &state, &vault)?;
        log::info!("stored {edition_id} revision {revision}");
        Ok(PutReceipt { edition_id, revision })
    }

    fn commit(&self, key: &VaultKey, state: &PublicState, vault: &vault::Vault) -> Result<(), StoreError> {
        let value = serde_json::to_value(state).expect("public state serializes");
        if let Some(path) = LeakScanner::new(vault.values().map(|e| e.full_name.as_str())).find(&value) {
            return Err(StoreError::LeakDetected { path });
        }
        let public = files::stage(&self.public_path(), PUBLIC_MAGIC, canonical_json(&value).as_bytes())?;
        files::write_atomically(&self.vault_path(), VAULT_MAGIC, &vault::seal(key, vault))?;
        files::commit(public, &self.public_path())
    }

    /// A given revision of an edition, or the latest when `revision` is `None`.
    pub fn get_edition(&self, id: &EditionId, revision: Option<u32>) -> Result<StoredEdition, StoreError> {
        let state = self.load()?;
        let not_found = || match revision {
            Some(r) => StoreError::NotFound(format!("edition {id} revision {r}")),
            None => StoreError::NotFound(format!("edition {id}")),
        };
        let conference = state.conferences.get(id.conference_slug()).ok_or_else(not_found)?;
        let revisions = conference.editions.get(&id.year()).ok_or_else(not_found)?;
        let found = match revision {
            Some(r) => revisions.iter().find(|x| x.revision == r),
            None => revisions.last(),
        }
        .ok_or_else(not_found)?;
        Ok(StoredEdition {
            conference_name: conference.name.clone(),
            revision: found.revision,
            edition: found.edition.clone(),
            ingest: found.ingest.clone(),
        })
    }

    pub fn report_for(&self, stored: &StoredEdition) -> DiversityReport {
        let key = (stored.edition.id(), stored.revision);
        let mut cache = self.reports.lock().unwrap_or_else(|e| e.into_inner());
        cache.entry(key).or_insert_with(|| compute_report(&stored.edition, &self.config)).clone()
    }

    /// Report for the latest revision of `id`.
    pub fn get_report(&self, id: &EditionId) -> Result<DiversityReport, StoreError> {
        Ok(self.report_for(&self.get_edition(id, None)?))
    }

    pub fn conferences(&self) -> Result<Vec<ConferenceSummary>, StoreError> {
        Ok(self
            .load()?
            .conferences
            .into_iter()
            .map(|(slug, c)| ConferenceSummary { slug, name: c.name, editions: c.editions.into_keys().collect() })
            .collect())
    }

    /// Latest revision of every edition, ordered by conference then year.
    pub fn latest_editions(&self) -> Result<Vec<StoredEdition>, StoreError> {
        let state = self.load()?;
        let mut out = Vec::new();
        for c in state.conferences.into_values() {
            for revisions in c.editions.into_values() {
                if let Some(r) = revisions.into_iter().last() {
                    out.push(StoredEdition {
                        conference_name: c.name.clone(),
                        revision: r.revision,
                        edition: r.edition,
                        ingest: r.ingest,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Builds the public snapshot and checks it against the vault.
    pub fn snapshot(&self) -> Result<PublicSnapshot, StoreError> {
        let names: Vec<String> = self.open_vault()?.into_values().map(|e| e.full_name).collect();
        let mut snapshot = PublicSnapshot::empty();
        for stored in self.latest_editions()? {
            let slug = stored.edition.conference_slug().to_string();
            if snapshot.conferences.last().is_none_or(|c| c.slug != slug) {
                snapshot.conferences.push(SnapshotConference {
                    slug,
                    name: stored.conference_name.clone(),
                    editions: Vec::new(),
                });
            }
            let report = serde_json::to_value(self.report_for(&stored)).expect("reports serialize");
            let edition = stored.edition;
            snapshot.conferences.last_mut().expect("pushed above").editions.push(SnapshotEdition {
                edition_id: edition.id().to_string(),
                year: edition.year(),
                revision: stored.revision,
                venue: edition.venue(),
                participations: edition.participations().to_vec(),
                report,
                ingest: stored.ingest,
            });
        }
        let value = serde_json::to_value(&snapshot).expect("snapshot serializes");
        if let Some(path) = LeakScanner::new(names.iter().map(String::as_str)).find(&value) {
            return Err(StoreError::LeakDetected { path });
        }
        Ok(snapshot)
    }

    /// Writes the snapshot to `path`. A leak aborts before anything is written.
    pub fn export_public(&self, path: &Path) -> Result<PublicSnapshot, StoreError> {
        let snapshot = self.snapshot()?;
        files::write_atomically(path, b"", canonical_json(&snapshot).as_bytes())?;
        Ok(snapshot)
    }
}
