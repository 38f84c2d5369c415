//! JSON bodies for every read endpoint. The CLI prints the same values, so
//! `divmeter report --json` and `GET .../report` agree byte for byte.

use std::collections::BTreeMap;

use divmeter_core::{boxplot_stats, build_matrix, timeline, CategorySpace, EditionId, Facet, FacetDistribution, Role};
use divmeter_store::Store;
use serde_json::{json, Map, Value};

use crate::error::{ApiError, ErrorKind};

pub fn edition_id(slug: &str, year: &str) -> Result<EditionId, ApiError> {
    format!("{slug}-{year}").parse().map_err(|_| ApiError::not_found(format!("edition {slug}/{year}")))
}

/// Conferences whose slug or name contains `query`, case-insensitively.
pub fn conferences(store: &Store, query: &str) -> Result<Value, ApiError> {
    let q = query.trim().to_lowercase();
    let hits: Vec<_> = store
        .conferences()?
        .into_iter()
        .filter(|c| q.is_empty() || c.slug.to_lowercase().contains(&q) || c.name.to_lowercase().contains(&q))
        .collect();
    Ok(serde_json::to_value(hits).expect("summaries serialize"))
}

pub fn report(store: &Store, id: &EditionId) -> Result<Value, ApiError> {
    Ok(serde_json::to_value(store.get_report(id)?).expect("reports serialize"))
}

fn percentages(dist: &FacetDistribution, space: &CategorySpace) -> Map<String, Value> {
    let total = dist.total() as f64;
    let categories: Vec<String> = match space {
        CategorySpace::Closed(set) => set.iter().cloned().collect(),
        CategorySpace::Open => dist.counts().keys().cloned().collect(),
    };
    categories.into_iter().map(|c| (c.clone(), json!(dist.count(&c) as f64 * 100.0 / total))).collect()
}

/// Histogram and map data per role. Roles without participants are left
/// out, as are facets of a role that have no known label.
pub fn distributions(store: &Store, id: &EditionId) -> Result<Value, ApiError> {
    let stored = store.get_edition(id, None)?;
    let mut roles = Map::new();
    if let Ok(matrix) = build_matrix(&stored.edition) {
        for role in Role::ALL {
            let participants = matrix.participants(role);
            if participants == 0 {
                continue;
            }
            let mut body = Map::new();
            body.insert("participants".into(), json!(participants));
            if let Some(d) = matrix.get(role, Facet::Gender) {
                body.insert("gender".into(), Value::Object(percentages(d, &CategorySpace::gender())));
            }
            if let Some(d) = matrix.get(role, Facet::Business) {
                body.insert("business".into(), Value::Object(percentages(d, &CategorySpace::business())));
            }
            if let Some(d) = matrix.get(role, Facet::Geography) {
                let counts: BTreeMap<&String, &u64> = d.counts().iter().filter(|(_, n)| **n > 0).collect();
                body.insert("countries".into(), json!(counts));
            }
            roles.insert(role.to_string(), Value::Object(body));
        }
    }
    Ok(json!({ "edition_id": id, "revision": stored.revision, "roles": roles }))
}

/// CDI per edition year of one conference; undefined values stay `null`.
pub fn conference_timeline(store: &Store, slug: &str) -> Result<Value, ApiError> {
    let editions: Vec<_> =
        store.latest_editions()?.into_iter().filter(|s| s.edition.conference_slug() == slug).collect();
    if editions.is_empty() {
        return Err(ApiError::not_found(format!("conference {slug}")));
    }
    let points = timeline(editions.iter().map(|s| (s.edition.year(), store.report_for(s).cdi_value())))
        .map_err(|e| ApiError::new(ErrorKind::Internal, "internal", e.to_string()))?;
    Ok(serde_json::to_value(points).expect("points serialize"))
}

/// Where this edition's CDI sits among the latest CDI of every edition.
pub fn context(store: &Store, id: &EditionId) -> Result<Value, ApiError> {
    let this = store.get_edition(id, None)?;
    let cdis: Vec<f64> = store.latest_editions()?.iter().filter_map(|s| store.report_for(s).cdi_value()).collect();
    let stats = boxplot_stats(&cdis).map_err(|_| {
        ApiError::new(ErrorKind::NoComparableData, "no_comparable_data", "no edition in the store has a defined CDI")
    })?;
    Ok(json!({
        "boxplot": stats,
        "compared": cdis.len(),
        "this": store.report_for(&this).cdi_value(),
    }))
}
