use serde::{Deserialize, Serialize};

use super::IndexError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub year: i32,
    /// `None` marks an edition without a defined conference index.
    pub cdi: Option<f64>,
}

/// Projects `(year, cdi)` pairs into a timeline, keeping undefined values as gaps.
pub fn timeline<I>(points: I) -> Result<Vec<TimelinePoint>, IndexError>
where
    I: IntoIterator<Item = (i32, Option<f64>)>,
{
    let mut out: Vec<TimelinePoint> = Vec::new();
    for (year, cdi) in points {
        if let Some(prev) = out.last() {
            if year <= prev.year {
                return Err(IndexError::UnsortedInput { previous: prev.year, next: year });
            }
        }
        out.push(TimelinePoint { year, cdi });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Five-number summary with quartiles interpolated linearly between closest ranks.
///
/// For sorted values `x[0..n]` the quantile at `p` sits at fractional rank
/// `h = (n - 1) p`, i.e. `x[⌊h⌋] + (h - ⌊h⌋)(x[⌊h⌋+1] - x[⌊h⌋])`.
pub fn boxplot_stats(values: &[f64]) -> Result<BoxplotStats, IndexError> {
    if values.is_empty() {
        return Err(IndexError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(BoxplotStats {
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(&next) if frac > 0.0 => sorted[lo] + frac * (next - sorted[lo]),
        _ => sorted[lo],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn timeline_examples() {
        let t = timeline([(2019, Some(0.5)), (2020, Some(0.7))]).unwrap();
        assert_eq!(t, vec![TimelinePoint { year: 2019, cdi: Some(0.5) }, TimelinePoint { year: 2020, cdi: Some(0.7) }]);
        assert!(timeline(std::iter::empty()).unwrap().is_empty());

        let t = timeline([(2019, Some(0.5)), (2020, None), (2021, Some(0.6))]).unwrap();
        assert_eq!(t[1], TimelinePoint { year: 2020, cdi: None });
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn timeline_rejects_unsorted() {
        assert_eq!(
            timeline([(2020, None), (2019, Some(0.1))]),
            Err(IndexError::UnsortedInput { previous: 2020, next: 2019 })
        );
        assert!(timeline([(2020, None), (2020, None)]).is_err());
    }

    #[test]
    fn boxplot_examples() {
        let b = boxplot_stats(&[0.4]).unwrap();
        assert_eq!(b, BoxplotStats { min: 0.4, q1: 0.4, median: 0.4, q3: 0.4, max: 0.4 });

        let b = boxplot_stats(&[0.5, 0.1, 0.4, 0.2, 0.3]).unwrap();
        assert_eq!(b, BoxplotStats { min: 0.1, q1: 0.2, median: 0.3, q3: 0.4, max: 0.5 });

        assert_eq!(boxplot_stats(&[]), Err(IndexError::EmptyInput));
    }

    #[test]
    fn boxplot_even_length_interpolates() {
        let b = boxplot_stats(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(b.q1, 1.75);
        assert_eq!(b.median, 2.5);
        assert_eq!(b.q3, 3.25);
    }

    // Oracle: insertion sort then the textbook 1 + (n-1)p one-based rank.
    fn oracle_quantile(values: &[f64], p: f64) -> f64 {
        let mut v = values.to_vec();
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                v.swap(j - 1, j);
                j -= 1;
            }
        }
        let rank = 1.0 + (v.len() as f64 - 1.0) * p;
        let k = rank.floor() as usize;
        let d = rank - k as f64;
        if k >= v.len() {
            v[v.len() - 1]
        } else if d == 0.0 {
            v[k - 1]
        } else {
            v[k - 1] + d * (v[k] - v[k - 1])
        }
    }

    #[test]
    fn boxplot_matches_sort_and_interpolate_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let values: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
            let b = boxplot_stats(&values).unwrap();
            assert_eq!(b.min, oracle_quantile(&values, 0.0));
            assert_eq!(b.q1, oracle_quantile(&values, 0.25));
            assert_eq!(b.median, oracle_quantile(&values, 0.5));
            assert_eq!(b.q3, oracle_quantile(&values, 0.75));
            assert_eq!(b.max, oracle_quantile(&values, 1.0));
            assert!(b.min <= b.q1 && b.q1 <= b.median && b.median <= b.q3 && b.q3 <= b.max);
        }
    }
}
