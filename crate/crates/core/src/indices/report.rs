use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize, Serializer};

use super::{normalized_shannon, pielou, DiversityValue, FacetDistribution, IndexError, IndexKind};
use crate::model::{Facet, Role};

/// Number of UN member states; the default reference richness for geography.
pub const UN_MEMBER_STATES: usize = 193;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexConfig {
    /// Country count that maps to a geographic index of 1.
    pub geo_reference_richness: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self { geo_reference_richness: UN_MEMBER_STATES }
    }
}

/// Per-(role, facet) distributions for one edition.
///
/// `participants` records how many (deduplicated) people hold each role,
/// including those whose labels are unknown, so coverage can be derived.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoleFacetMatrix {
    entries: BTreeMap<(Role, Facet), FacetDistribution>,
    participants: BTreeMap<Role, u64>,
}

impl RoleFacetMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the entry for `(role, facet)`, replacing any previous one.
    pub fn insert(&mut self, role: Role, facet: Facet, dist: FacetDistribution) -> Option<FacetDistribution> {
        self.entries.insert((role, facet), dist)
    }

    pub fn with(mut self, role: Role, facet: Facet, dist: FacetDistribution) -> Self {
        self.insert(role, facet, dist);
        self
    }

    pub fn set_participants(&mut self, role: Role, n: u64) {
        if n == 0 {
            self.participants.remove(&role);
        } else {
            self.participants.insert(role, n);
        }
    }

    pub fn participants(&self, role: Role) -> u64 {
        self.participants.get(&role).copied().unwrap_or(0)
    }

    /// The entry for `(role, facet)`; entries with a zero total count as absent.
    pub fn get(&self, role: Role, facet: Facet) -> Option<&FacetDistribution> {
        self.entries.get(&(role, facet)).filter(|d| !d.is_empty())
    }

    pub fn entries(&self) -> impl Iterator<Item = (Role, Facet, &FacetDistribution)> {
        self.entries.iter().filter(|(_, d)| !d.is_empty()).map(|(&(r, f), d)| (r, f, d))
    }

    pub fn is_empty(&self) -> bool {
        self.entries().next().is_none()
    }

    /// Fraction of a role's participants with a known label for `facet`.
    ///
    /// Roles without a recorded participant count are assumed fully covered
    /// by their entries.
    pub fn coverage(&self, role: Role, facet: Facet) -> Option<f64> {
        let known = self.get(role, facet).map_or(0, FacetDistribution::total);
        match self.participants(role) {
            0 if known == 0 => None,
            0 => Some(1.0),
            n => Some(known as f64 / n as f64),
        }
    }
}

/// A facet's role-averaged index plus the per-role values that fed it.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetIndex {
    pub value: DiversityValue,
    pub per_role: BTreeMap<Role, DiversityValue>,
    pub missing_roles: BTreeSet<Role>,
}

fn role_value(dist: &FacetDistribution, facet: Facet, config: &IndexConfig) -> Result<DiversityValue, IndexError> {
    match facet {
        Facet::Gender => pielou(dist, 2),
        Facet::Business => pielou(dist, 3),
        Facet::Geography => normalized_shannon(dist, config.geo_reference_richness),
    }
}

/// Averages the facet's per-role index over the roles that have data.
///
/// Absent roles are excluded from the mean and listed in `missing_roles`.
pub fn facet_index(matrix: &RoleFacetMatrix, facet: Facet, config: &IndexConfig) -> Result<FacetIndex, IndexError> {
    let mut per_role = BTreeMap::new();
    let mut missing_roles = BTreeSet::new();
    for role in Role::ALL {
        match matrix.get(role, facet) {
            Some(dist) => {
                per_role.insert(role, role_value(dist, facet, config)?);
            }
            None => {
                missing_roles.insert(role);
            }
        }
    }
    if per_role.is_empty() {
        return Err(IndexError::NoDataForFacet(facet));
    }
    let sum: f64 = per_role.values().map(|v| v.value).sum();
    let kind = per_role.values().next().map(|v| v.kind).unwrap_or(IndexKind::Pielou);
    let value = DiversityValue {
        value: sum / per_role.len() as f64,
        kind,
        sample_size: per_role.values().map(|v| v.sample_size).sum(),
    };
    Ok(FacetIndex { value, per_role, missing_roles })
}

/// The four headline indices for an edition plus their breakdown.
///
/// Undefined headline indices (no role has data for the facet) are `None`
/// and serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityReport {
    #[serde(serialize_with = "headline")]
    pub gdi: Option<DiversityValue>,
    #[serde(serialize_with = "headline")]
    pub bdi: Option<DiversityValue>,
    #[serde(serialize_with = "headline")]
    pub geodi: Option<DiversityValue>,
    #[serde(serialize_with = "headline")]
    pub cdi: Option<DiversityValue>,
    pub per_role: BTreeMap<Role, BTreeMap<Facet, DiversityValue>>,
    pub coverage: BTreeMap<Role, BTreeMap<Facet, f64>>,
    /// Roles with no data for any facet.
    pub missing_roles: BTreeSet<Role>,
}

fn headline<S: Serializer>(v: &Option<DiversityValue>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_f64(v.value),
        None => s.serialize_none(),
    }
}

impl DiversityReport {
    /// A report where every index is undefined, keeping whatever coverage
    /// information `matrix` carries.
    pub fn undefined(matrix: &RoleFacetMatrix) -> Self {
        Self {
            gdi: None,
            bdi: None,
            geodi: None,
            cdi: None,
            per_role: BTreeMap::new(),
            coverage: coverage_of(matrix),
            missing_roles: Role::ALL.into_iter().collect(),
        }
    }

    pub fn facet(&self, facet: Facet) -> Option<&DiversityValue> {
        match facet {
            Facet::Gender => self.gdi.as_ref(),
            Facet::Business => self.bdi.as_ref(),
            Facet::Geography => self.geodi.as_ref(),
        }
    }

    pub fn cdi_value(&self) -> Option<f64> {
        self.cdi.map(|v| v.value)
    }
}

fn coverage_of(matrix: &RoleFacetMatrix) -> BTreeMap<Role, BTreeMap<Facet, f64>> {
    let mut coverage: BTreeMap<Role, BTreeMap<Facet, f64>> = BTreeMap::new();
    for role in Role::ALL {
        for facet in Facet::ALL {
            if let Some(c) = matrix.coverage(role, facet) {
                coverage.entry(role).or_default().insert(facet, c);
            }
        }
    }
    coverage
}

/// Computes GDI, BDI, GeoDI and their mean, the CDI.
pub fn diversity_report(matrix: &RoleFacetMatrix, config: &IndexConfig) -> Result<DiversityReport, IndexError> {
    let mut facets: BTreeMap<Facet, FacetIndex> = BTreeMap::new();
    for facet in Facet::ALL {
        match facet_index(matrix, facet, config) {
            Ok(fi) => {
                facets.insert(facet, fi);
            }
            Err(IndexError::NoDataForFacet(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if facets.is_empty() {
        return Err(IndexError::NoData);
    }

    let mut per_role: BTreeMap<Role, BTreeMap<Facet, DiversityValue>> = BTreeMap::new();
    for (&facet, fi) in &facets {
        for (&role, &v) in &fi.per_role {
            per_role.entry(role).or_default().insert(facet, v);
        }
    }
    let missing_roles = Role::ALL.into_iter().filter(|r| !per_role.contains_key(r)).collect();

    let defined: Vec<&DiversityValue> = facets.values().map(|fi| &fi.value).collect();
    let cdi = DiversityValue {
        value: defined.iter().map(|v| v.value).sum::<f64>() / defined.len() as f64,
        kind: IndexKind::Composite,
        sample_size: defined.iter().map(|v| v.sample_size).sum(),
    };

    let pick = |f: Facet| facets.get(&f).map(|fi| fi.value);
    Ok(DiversityReport {
        gdi: pick(Facet::Gender),
        bdi: pick(Facet::Business),
        geodi: pick(Facet::Geography),
        cdi: Some(cdi),
        per_role,
        coverage: coverage_of(matrix),
        missing_roles,
    })
}
