//! Ingestion of conference participation data.
//!
//! Sources are DBLP XML exports ([`dblp`]), hand-annotated CSV files
//! ([`annotations`]) and supplementary per-author affiliation tables.
//! Affiliations are resolved against an institution [`registry`], and
//! gender is inferred through a pluggable [`gender::GenderProvider`]. The
//! [`pipeline`] merges everything into one [`divmeter_core::Edition`].

pub mod annotations;
mod csvio;
pub mod dblp;
mod error;
pub mod gender;
pub mod pipeline;
pub mod registry;

pub use annotations::{parse_affiliations, parse_annotations, AffiliationTable, AnnotationParse, ParticipationDraft};
pub use dblp::{parse_dblp, AuthorName, DblpParse, RawPaperRecord};
pub use error::{IngestError, Skipped};
pub use gender::{infer_gender, GenderProvider, HttpGenderProvider, LexiconProvider, ProviderAnswer, ProviderError};
pub use pipeline::{assemble_edition, Coverage, IngestOptions, IngestOutcome, IngestReport, ProviderFailure, Sources};
pub use registry::{resolve_affiliation, InstitutionRegistry, InstitutionRegistryEntry, MatchKind, Resolution};
