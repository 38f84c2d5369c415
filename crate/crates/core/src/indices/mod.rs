//! Shannon and Pielou indices over categorical distributions.
//!
//! All logarithms are natural. Zero-count categories contribute nothing
//! (`0 · ln 0 = 0`). Pielou evenness is normalized by the size of the facet's
//! fixed category space, not by the number of categories observed, so a
//! distribution concentrated in a single category scores 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

mod report;
mod stats;

pub use report::{diversity_report, facet_index, DiversityReport, FacetIndex, IndexConfig, RoleFacetMatrix};
pub use stats::{boxplot_stats, timeline, BoxplotStats, TimelinePoint};

use crate::model::Facet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("category space of size {space} is smaller than the {observed} observed categories")]
    CategorySpaceTooSmall { space: usize, observed: usize },
    #[error("reference richness must be at least 2, got {0}")]
    InvalidReferenceRichness(usize),
    #[error("category `{0}` is not part of this facet's category space")]
    UnknownCategory(String),
    #[error("no role has data for the {0} facet")]
    NoDataForFacet(Facet),
    #[error("no data for any role or facet")]
    NoData,
    #[error("timeline years must be strictly increasing ({previous} followed by {next})")]
    UnsortedInput { previous: i32, next: i32 },
    #[error("cannot summarize an empty list of values")]
    EmptyInput,
}

/// The admissible categories for one facet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CategorySpace {
    /// A closed set; counts outside it are rejected.
    Closed(BTreeSet<String>),
    /// Any category id is admissible (geography).
    Open,
}

impl CategorySpace {
    pub fn closed<I, S>(categories: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        CategorySpace::Closed(categories.into_iter().map(Into::into).collect())
    }

    pub fn gender() -> Self {
        Self::closed(["woman", "man"])
    }

    pub fn business() -> Self {
        Self::closed(["academia", "industry", "research_centre"])
    }

    pub fn for_facet(facet: Facet) -> Self {
        match facet {
            Facet::Gender => Self::gender(),
            Facet::Business => Self::business(),
            Facet::Geography => CategorySpace::Open,
        }
    }

    pub fn contains(&self, category: &str) -> bool {
        match self {
            CategorySpace::Closed(set) => set.contains(category),
            CategorySpace::Open => true,
        }
    }

    /// Number of admissible categories, `None` for an open space.
    pub fn size(&self) -> Option<usize> {
        match self {
            CategorySpace::Closed(set) => Some(set.len()),
            CategorySpace::Open => None,
        }
    }
}

/// Counts per category within one facet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FacetDistribution {
    counts: BTreeMap<String, u64>,
    space: CategorySpace,
}

impl FacetDistribution {
    pub fn new(space: CategorySpace) -> Self {
        Self { counts: BTreeMap::new(), space }
    }

    /// Builds a distribution, rejecting categories outside `space`.
    pub fn with_counts<I, S>(space: CategorySpace, counts: I) -> Result<Self, IndexError>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut dist = Self::new(space);
        for (category, n) in counts {
            dist.add(category, n)?;
        }
        Ok(dist)
    }

    /// An open-space distribution; convenient for ad-hoc category ids.
    pub fn open<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        Self::with_counts(CategorySpace::Open, counts).expect("open space admits every category")
    }

    pub fn add(&mut self, category: impl Into<String>, n: u64) -> Result<(), IndexError> {
        let category = category.into();
        if !self.space.contains(&category) {
            return Err(IndexError::UnknownCategory(category));
        }
        *self.counts.entry(category).or_insert(0) += n;
        Ok(())
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn count(&self, category: &str) -> u64 {
        self.counts.get(category).copied().unwrap_or(0)
    }

    pub fn space(&self) -> &CategorySpace {
        &self.space
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Number of categories with a nonzero count (observed richness).
    pub fn richness(&self) -> usize {
        self.counts.values().filter(|&&n| n > 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    Shannon,
    Pielou,
    NormalizedShannon,
    /// Mean of facet indices (the conference index).
    Composite,
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexKind::Shannon => "shannon",
            IndexKind::Pielou => "pielou",
            IndexKind::NormalizedShannon => "normalized-shannon",
            IndexKind::Composite => "composite",
        })
    }
}

/// A computed index together with the sample it was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityValue {
    pub value: f64,
    pub kind: IndexKind,
    pub sample_size: u64,
}

/// Shannon entropy `H' = -Σ p_i ln p_i`.
pub fn shannon(dist: &FacetDistribution) -> Result<DiversityValue, IndexError> {
    let total = dist.total();
    if total == 0 {
        return Err(IndexError::EmptyDistribution);
    }
    let n = total as f64;
    let mut h = 0.0;
    for &c in dist.counts.values() {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.ln();
        }
    }
    Ok(DiversityValue { value: h.max(0.0), kind: IndexKind::Shannon, sample_size: total })
}

/// Pielou evenness `J' = H' / ln s` over a category space of size `s`.
///
/// A one-category space is trivially even and yields 1.
pub fn pielou(dist: &FacetDistribution, s: usize) -> Result<DiversityValue, IndexError> {
    let h = shannon(dist)?;
    let observed = dist.richness();
    if s < observed.max(1) {
        return Err(IndexError::CategorySpaceTooSmall { space: s, observed });
    }
    let value = if s == 1 { 1.0 } else { (h.value / (s as f64).ln()).clamp(0.0, 1.0) };
    Ok(DiversityValue { value, kind: IndexKind::Pielou, sample_size: h.sample_size })
}

/// Shannon entropy normalized by a fixed reference richness, `min(H' / ln s_ref, 1)`.
///
/// Unlike Pielou over observed categories, this keeps rewarding richness:
/// an even spread over more categories scores higher.
pub fn normalized_shannon(dist: &FacetDistribution, s_ref: usize) -> Result<DiversityValue, IndexError> {
    let h = shannon(dist)?;
    if s_ref < 2 {
        return Err(IndexError::InvalidReferenceRichness(s_ref));
    }
    Ok(DiversityValue {
        value: (h.value / (s_ref as f64).ln()).clamp(0.0, 1.0),
        kind: IndexKind::NormalizedShannon,
        sample_size: h.sample_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent oracle: entropy from the `ln N - Σ c ln c / N` identity.
    fn entropy_oracle(counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        let n = n as f64;
        let s: f64 = counts.iter().filter(|&&c| c > 0).map(|&c| c as f64 * (c as f64).ln()).sum();
        n.ln() - s / n
    }

    fn open(counts: &[(&str, u64)]) -> FacetDistribution {
        FacetDistribution::open(counts.iter().map(|&(k, v)| (k, v)))
    }

    #[test]
    fn shannon_examples() {
        let v = shannon(&open(&[("a", 1), ("b", 1)])).unwrap();
        assert!((v.value - 2f64.ln()).abs() < 1e-15);
        assert_eq!(v.kind, IndexKind::Shannon);
        assert_eq!(v.sample_size, 2);

        assert_eq!(shannon(&open(&[("a", 10)])).unwrap().value, 0.0);

        let v = shannon(&open(&[("women", 25), ("men", 75)])).unwrap();
        assert!((entropy_oracle(&[25, 75]) - 0.562335).abs() < 5e-7);
        assert!((v.value - entropy_oracle(&[25, 75])).abs() < 1e-12);
        assert!((v.value - 0.562335).abs() < 5e-7);
    }

    #[test]
    fn shannon_rejects_empty() {
        assert_eq!(shannon(&open(&[])), Err(IndexError::EmptyDistribution));
        assert_eq!(shannon(&open(&[("a", 0)])), Err(IndexError::EmptyDistribution));
    }

    #[test]
    fn pielou_examples() {
        let v = pielou(&open(&[("a", 5), ("b", 5), ("c", 5)]), 3).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);

        let v = pielou(&open(&[("women", 10), ("men", 0)]), 2).unwrap();
        assert_eq!(v.value, 0.0);

        let v = pielou(&open(&[("women", 25), ("men", 75)]), 2).unwrap();
        assert!((v.value - entropy_oracle(&[25, 75]) / 2f64.ln()).abs() < 1e-12);
        assert!((v.value - 0.811278).abs() < 5e-7);
    }

    #[test]
    fn pielou_degenerate_and_errors() {
        assert_eq!(pielou(&open(&[("a", 3)]), 1).unwrap().value, 1.0);
        assert_eq!(
            pielou(&open(&[("a", 1), ("b", 1), ("c", 1)]), 2),
            Err(IndexError::CategorySpaceTooSmall { space: 2, observed: 3 })
        );
        assert_eq!(pielou(&open(&[]), 2), Err(IndexError::EmptyDistribution));
        assert!(matches!(pielou(&open(&[("a", 1)]), 0), Err(IndexError::CategorySpaceTooSmall { .. })));
    }

    #[test]
    fn normalized_shannon_examples() {
        let uniform: Vec<(String, u64)> = (0..193).map(|i| (format!("c{i}"), 7)).collect();
        let v = normalized_shannon(&FacetDistribution::open(uniform), 193).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);

        assert_eq!(normalized_shannon(&open(&[("US", 40)]), 193).unwrap().value, 0.0);

        let d = open(&[("US", 50), ("CN", 30), ("DE", 20)]);
        let h = entropy_oracle(&[50, 30, 20]);
        assert!((h - 1.029653).abs() < 5e-7);
        let v = normalized_shannon(&d, 193).unwrap();
        assert!((v.value - h / 193f64.ln()).abs() < 1e-12);
        assert!((v.value - 0.195651).abs() < 5e-7);
        assert_eq!(v.kind, IndexKind::NormalizedShannon);
    }

    #[test]
    fn normalized_shannon_clamps_and_validates() {
        let d = open(&[("a", 1), ("b", 1), ("c", 1), ("d", 1)]);
        assert_eq!(normalized_shannon(&d, 2).unwrap().value, 1.0);
        assert_eq!(normalized_shannon(&d, 1), Err(IndexError::InvalidReferenceRichness(1)));
        assert_eq!(normalized_shannon(&open(&[]), 193), Err(IndexError::EmptyDistribution));
    }

    #[test]
    fn normalized_shannon_rewards_richness() {
        let mut prev = 0.0;
        for k in 1..=20u64 {
            let d = FacetDistribution::open((0..k).map(|i| (format!("c{i}"), 5)));
            let v = normalized_shannon(&d, 193).unwrap().value;
            if k > 1 {
                assert!(v > prev, "richness {k} did not increase the value");
            }
            prev = v;
        }
    }

    #[test]
    fn closed_space_rejects_foreign_categories() {
        let err = FacetDistribution::with_counts(CategorySpace::gender(), [("robot", 1)]).unwrap_err();
        assert_eq!(err, IndexError::UnknownCategory("robot".into()));
        let ok = FacetDistribution::with_counts(CategorySpace::business(), [("academia", 2), ("industry", 0)]).unwrap();
        assert_eq!(ok.total(), 2);
        assert_eq!(ok.richness(), 1);
    }

    fn small_counts() -> impl Strategy<Value = Vec<u64>> {
        prop::collection::vec(0u64..60, 1..8).prop_filter("non-empty", |v| v.iter().sum::<u64>() > 0)
    }

    fn dist_of(counts: &[u64]) -> FacetDistribution {
        FacetDistribution::open(counts.iter().enumerate().map(|(i, &c)| (format!("k{i}"), c)))
    }

    proptest! {
        #[test]
        fn shannon_matches_oracle_and_bounds(counts in small_counts()) {
            let d = dist_of(&counts);
            let h = shannon(&d).unwrap().value;
            prop_assert!((h - entropy_oracle(&counts)).abs() < 1e-12);
            prop_assert!(h >= 0.0);
            prop_assert!(h <= (d.richness() as f64).ln() + 1e-12);
            prop_assert_eq!(h == 0.0, d.richness() == 1);
        }

        #[test]
        fn permutation_invariance(counts in small_counts(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = counts.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let s = counts.len();
            let a = dist_of(&counts);
            let b = dist_of(&shuffled);
            prop_assert!((shannon(&a).unwrap().value - shannon(&b).unwrap().value).abs() < 1e-12);
            prop_assert!((pielou(&a, s).unwrap().value - pielou(&b, s).unwrap().value).abs() < 1e-12);
        }

        #[test]
        fn scale_invariance(counts in small_counts(), k in 1u64..20) {
            let s = counts.len();
            let a = dist_of(&counts);
            let scaled: Vec<u64> = counts.iter().map(|c| c * k).collect();
            let b = dist_of(&scaled);
            prop_assert!((shannon(&a).unwrap().value - shannon(&b).unwrap().value).abs() < 1e-12);
            prop_assert!((pielou(&a, s).unwrap().value - pielou(&b, s).unwrap().value).abs() < 1e-12);
            prop_assert!((normalized_shannon(&a, 193).unwrap().value - normalized_shannon(&b, 193).unwrap().value).abs() < 1e-12);
        }

        #[test]
        fn evenness_bounds(counts in small_counts(), extra in 0usize..5, s_ref in 2usize..300) {
            let d = dist_of(&counts);
            let j = pielou(&d, counts.len() + extra).unwrap().value;
            prop_assert!((0.0..=1.0).contains(&j));
            let g = normalized_shannon(&d, s_ref).unwrap().value;
            prop_assert!((0.0..=1.0).contains(&g));
        }

        // Moving one individual from a larger group to a strictly smaller one
        // never lowers entropy.
        #[test]
        fn transfer_towards_evenness(counts in prop::collection::vec(0u64..30, 2..6), i in 0usize..6, j in 0usize..6) {
            let i = i % counts.len();
            let j = j % counts.len();
            prop_assume!(counts[i] > counts[j] + 1);
            let mut moved = counts.clone();
            moved[i] -= 1;
            moved[j] += 1;
            let before = entropy_oracle(&counts);
            let after = shannon(&dist_of(&moved)).unwrap().value;
            prop_assert!(after >= before - 1e-12);
        }
    }
}
