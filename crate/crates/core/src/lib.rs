//! Core types and computations for measuring diversity at conference editions.
//!
//! The [`indices`] module holds the Shannon/Pielou math and its aggregation
//! into the gender, business, geographic and overall conference indices.
//! [`model`] defines editions, participations and their labels, and
//! [`privacy`] the pseudonymization used to keep names out of public data.

pub mod country;
pub mod indices;
pub mod model;
pub mod privacy;

pub use country::CountryCode;
pub use indices::{
    boxplot_stats, diversity_report, facet_index, normalized_shannon, pielou, shannon, timeline, BoxplotStats,
    CategorySpace, DiversityReport, DiversityValue, FacetDistribution, FacetIndex, IndexConfig, IndexError, IndexKind,
    RoleFacetMatrix, TimelinePoint,
};
pub use model::{
    apply_self_declaration, build_matrix, Business, BusinessLabel, CountryLabel, Edition, EditionId, Facet, Gender,
    GenderLabel, Label, LabelSource, ModelError, Participation, Role, SelfDeclaration, Venue,
};
pub use privacy::{normalize_name, PersonId, Pseudonymizer, VaultEntry, VaultKey};
