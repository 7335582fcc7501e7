//! Midranks, tie patterns and the large-sample diagnostics.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Multiplicities of the distinct values in a pooled sample, in increasing
/// order of value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TiePattern {
    counts: Vec<u64>,
    total: u64,
}

impl TiePattern {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptySample);
        }
        if counts.contains(&0) {
            return Err(Error::param("tie multiplicities must be at least 1"));
        }
        let total = counts.iter().sum();
        Ok(TiePattern { counts, total })
    }

    /// `n` distinct values, each appearing once.
    pub fn untied(n: u64) -> Result<Self> {
        Self::new(vec![1; n as usize])
    }

    /// Number of distinct values `e`.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Pooled sample size `N`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn has_ties(&self) -> bool {
        self.counts.iter().any(|&d| d > 1)
    }

    /// Σ d(d−1)
    pub fn s2(&self) -> u128 {
        self.counts
            .iter()
            .map(|&d| {
                let d = d as u128;
                d * (d - 1)
            })
            .sum()
    }

    /// Σ d(d−1)(d−2)
    pub fn s3(&self) -> u128 {
        self.counts
            .iter()
            .map(|&d| {
                let d = d as u128;
                // d ≥ 1, so d(d−1) = 0 covers the d − 2 underflow.
                if d < 2 {
                    0
                } else {
                    d * (d - 1) * (d - 2)
                }
            })
            .sum()
    }

    /// Σ d(d−1)(d+1) = Σ (d³ − d)
    pub fn s3_plus(&self) -> u128 {
        self.counts
            .iter()
            .map(|&d| {
                let d = d as u128;
                d * (d - 1) * (d + 1)
            })
            .sum()
    }

    /// Midrank shared by every observation of the `index`-th distinct value.
    pub fn midrank_of(&self, index: usize) -> f64 {
        let below: u64 = self.counts[..index].iter().sum();
        below as f64 + (self.counts[index] as f64 + 1.0) / 2.0
    }
}

fn check_orderable(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::NonOrderable(i));
    }
    Ok(())
}

/// Sorted order of `values` together with the distinct-value index of each
/// input position.
fn distinct_index(values: &[f64]) -> Result<(Vec<f64>, Vec<u64>, Vec<u32>)> {
    check_orderable(values)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));

    let mut distinct = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut ids = vec![0u32; values.len()];
    for &i in &order {
        let v = values[i];
        // -0.0 and 0.0 compare equal and are one tie block.
        if distinct.last() != Some(&v) {
            distinct.push(v);
            counts.push(0);
        }
        *counts.last_mut().unwrap() += 1;
        ids[i] = (distinct.len() - 1) as u32;
    }
    Ok((distinct, counts, ids))
}

/// Midranks of `values`, in input order. Ties are exact equality.
pub fn compute_midranks(values: &[f64]) -> Result<Vec<f64>> {
    let (_, counts, ids) = distinct_index(values)?;
    let pattern = TiePattern::new(counts)?;
    let table: Vec<f64> = (0..pattern.distinct()).map(|k| pattern.midrank_of(k)).collect();
    Ok(ids.iter().map(|&k| table[k as usize]).collect())
}

pub fn extract_tie_pattern(values: &[f64]) -> Result<TiePattern> {
    let (_, counts, _) = distinct_index(values)?;
    TiePattern::new(counts)
}

/// Pooled samples with midranks. Group 0 is the control in the many-to-one
/// setting; the all-pairs procedures treat every group alike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSamples {
    midranks: Vec<f64>,
    groups: Vec<usize>,
    sizes: Vec<usize>,
    tie_pattern: TiePattern,
    values: Vec<f64>,
    value_ids: Vec<u32>,
}

impl RankedSamples {
    /// Pools `groups` (each nonempty, at least two of them) and ranks them.
    pub fn new<S: AsRef<[f64]>>(groups: &[S]) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::param("need a control and at least one other group"));
        }
        let mut pooled = Vec::new();
        let mut labels = Vec::new();
        let mut sizes = Vec::with_capacity(groups.len());
        for (g, sample) in groups.iter().enumerate() {
            let sample = sample.as_ref();
            if sample.is_empty() {
                return Err(Error::EmptySample);
            }
            pooled.extend_from_slice(sample);
            labels.extend(std::iter::repeat_n(g, sample.len()));
            sizes.push(sample.len());
        }
        let (values, counts, value_ids) = distinct_index(&pooled)?;
        let tie_pattern = TiePattern::new(counts)?;
        let table: Vec<f64> = (0..tie_pattern.distinct()).map(|k| tie_pattern.midrank_of(k)).collect();
        let midranks = value_ids.iter().map(|&k| table[k as usize]).collect();
        Ok(RankedSamples { midranks, groups: labels, sizes, tie_pattern, values, value_ids })
    }

    pub fn midranks(&self) -> &[f64] {
        &self.midranks
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn tie_pattern(&self) -> &TiePattern {
        &self.tie_pattern
    }

    /// Distinct original values in increasing order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index into [`values`](Self::values) for each pooled observation.
    pub fn value_ids(&self) -> &[u32] {
        &self.value_ids
    }

    pub fn total(&self) -> usize {
        self.midranks.len()
    }

    pub fn group_count(&self) -> usize {
        self.sizes.len()
    }

    /// Midranks of the observations in group `g`.
    pub fn group_midranks(&self, g: usize) -> Vec<f64> {
        self.groups.iter().zip(&self.midranks).filter(|(&l, _)| l == g).map(|(_, &r)| r).collect()
    }
}

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_MIN_GROUP_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_tie_fraction: f64,
    pub min_group_fraction: f64,
    pub epsilon: f64,
    pub min_group_size: usize,
    pub warnings: Vec<String>,
    /// Informational flags that do not indicate a violated condition.
    pub notes: Vec<String>,
}

impl Diagnostics {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Checks the large-sample conditions with the default group-size floor.
pub fn check_asymptotic_conditions(samples: &RankedSamples, epsilon: f64) -> Result<Diagnostics> {
    check_asymptotic_conditions_with(samples, epsilon, DEFAULT_MIN_GROUP_SIZE)
}

/// Flags a tie block larger than `(1 − epsilon)·N` and any group smaller than
/// `min_group_size`.
pub fn check_asymptotic_conditions_with(
    samples: &RankedSamples,
    epsilon: f64,
    min_group_size: usize,
) -> Result<Diagnostics> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let n = samples.total() as f64;
    let tie = samples.tie_pattern();
    let max_tie_fraction = tie.max_count() as f64 / n;
    let smallest = samples.sizes().iter().copied().min().unwrap_or(0);
    let min_group_fraction = smallest as f64 / n;

    let mut warnings = Vec::new();
    let mut notes = Vec::new();
    if max_tie_fraction > 1.0 - epsilon {
        warnings.push(format!("extreme ties: max d/N = {max_tie_fraction:.1}"));
    }
    for (g, &size) in samples.sizes().iter().enumerate() {
        if size < min_group_size {
            warnings.push(format!("small group: group {g} has {size} observations (< {min_group_size})"));
        }
    }
    if tie.distinct() == 1 {
        notes.push("all observations are tied".to_string());
    } else if tie.distinct() == 2 {
        notes.push("two-valued data".to_string());
    }
    Ok(Diagnostics { max_tie_fraction, min_group_fraction, epsilon, min_group_size, warnings, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn midranks_without_ties_are_ranks() {
        assert_eq!(compute_midranks(&[3.0, 1.0, 2.0]).unwrap(), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn midranks_average_tied_blocks() {
        assert_eq!(compute_midranks(&[2.0, 2.0, 5.0]).unwrap(), vec![1.5, 1.5, 3.0]);
        assert_eq!(compute_midranks(&[1.0, 1.0, 2.0, 3.0, 3.0, 3.0]).unwrap(), vec![1.5, 1.5, 3.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn midrank_errors() {
        assert_eq!(compute_midranks(&[]), Err(Error::EmptySample));
        assert_eq!(compute_midranks(&[1.0, f64::NAN]), Err(Error::NonOrderable(1)));
        assert_eq!(extract_tie_pattern(&[f64::NAN]), Err(Error::NonOrderable(0)));
    }

    #[test]
    fn tie_patterns() {
        let t = extract_tie_pattern(&[1.0, 1.0, 2.0, 3.0, 3.0, 3.0]).unwrap();
        assert_eq!((t.distinct(), t.counts(), t.total()), (3, &[2, 1, 3][..], 6));
        let t = extract_tie_pattern(&[7.0; 4]).unwrap();
        assert_eq!((t.distinct(), t.counts(), t.total()), (1, &[4][..], 4));
        let t = extract_tie_pattern(&[5.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(t.counts(), &[1, 1, 1, 1]);
        assert!(!t.has_ties());
    }

    #[test]
    fn tie_sums() {
        let t = TiePattern::new(vec![2, 1, 3]).unwrap();
        assert_eq!(t.s2(), 8);
        assert_eq!(t.s3(), 6);
        assert_eq!(t.s3_plus(), 30);
        let u = TiePattern::untied(9).unwrap();
        assert_eq!((u.s2(), u.s3(), u.s3_plus()), (0, 0, 0));
        assert!(TiePattern::new(vec![]).is_err());
        assert!(TiePattern::new(vec![1, 0]).is_err());
    }

    #[test]
    fn ranked_samples_layout() {
        let s = RankedSamples::new(&[vec![1.0, 1.0], vec![2.0, 3.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(s.sizes(), &[2, 2, 2]);
        assert_eq!(s.groups(), &[0, 0, 1, 1, 2, 2]);
        assert_eq!(s.midranks(), &[1.5, 1.5, 3.0, 5.0, 5.0, 5.0]);
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.group_midranks(1), vec![3.0, 5.0]);
        assert!(RankedSamples::new(&[vec![1.0]]).is_err());
        assert_eq!(RankedSamples::new(&[vec![1.0], vec![]]), Err(Error::EmptySample));
    }

    #[test]
    fn diagnostics_fully_tied() {
        let s = RankedSamples::new(&[vec![3.0, 3.0], vec![3.0, 3.0]]).unwrap();
        let d = check_asymptotic_conditions(&s, 0.1).unwrap();
        assert_eq!(d.max_tie_fraction, 1.0);
        assert!(d.warnings.iter().any(|w| w == "extreme ties: max d/N = 1.0"));
    }

    #[test]
    fn diagnostics_clean_for_large_untied_groups() {
        let groups: Vec<Vec<f64>> = (0..3).map(|g| (0..100).map(|i| (3 * i + g) as f64).collect()).collect();
        let s = RankedSamples::new(&groups).unwrap();
        let d = check_asymptotic_conditions(&s, 0.1).unwrap();
        assert!(d.is_clean(), "{:?}", d.warnings);
        assert!(d.notes.is_empty());
        assert!((d.min_group_fraction - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn diagnostics_two_valued() {
        let groups: Vec<Vec<f64>> = (0..3).map(|g| (0..100).map(|i| ((i + g) % 2) as f64).collect()).collect();
        let s = RankedSamples::new(&groups).unwrap();
        assert_eq!(s.tie_pattern().counts(), &[150, 150]);
        let d = check_asymptotic_conditions(&s, 0.4).unwrap();
        assert!(d.is_clean());
        assert_eq!(d.notes, vec!["two-valued data".to_string()]);
        assert!(check_asymptotic_conditions(&s, 0.0).is_err());
        assert!(check_asymptotic_conditions(&s, 1.0).is_err());
    }

    #[test]
    fn small_group_floor() {
        let s = RankedSamples::new(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0, 7.0, 8.0]]).unwrap();
        let d = check_asymptotic_conditions_with(&s, 0.1, 5).unwrap();
        assert_eq!(d.warnings.len(), 1);
        assert!(d.warnings[0].contains("group 0"));
    }

    fn tied_values() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0i32..6, 1..40).prop_map(|v| v.into_iter().map(f64::from).collect())
    }

    proptest! {
        #[test]
        fn midranks_sum_to_triangular(values in tied_values()) {
            let r = compute_midranks(&values).unwrap();
            let n = values.len() as f64;
            prop_assert_eq!(r.iter().sum::<f64>(), n * (n + 1.0) / 2.0);
            prop_assert!(r.iter().all(|x| (2.0 * x).fract() == 0.0));
        }

        #[test]
        fn midranks_permutation_equivariant(values in tied_values(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut perm: Vec<usize> = (0..values.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let permuted: Vec<f64> = perm.iter().map(|&i| values[i]).collect();
            let r = compute_midranks(&values).unwrap();
            let rp = compute_midranks(&permuted).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(rp[k], r[i]);
            }
            prop_assert_eq!(extract_tie_pattern(&values).unwrap(), extract_tie_pattern(&permuted).unwrap());
        }

        #[test]
        fn midrank_matches_block_formula(values in tied_values()) {
            let t = extract_tie_pattern(&values).unwrap();
            let mut sorted = compute_midranks(&values).unwrap();
            sorted.sort_by(f64::total_cmp);
            let mut pos = 0usize;
            let mut cum = 0u64;
            for &d in t.counts() {
                cum += d;
                let expected = cum as f64 - d as f64 + (d as f64 + 1.0) / 2.0;
                for _ in 0..d {
                    prop_assert_eq!(sorted[pos], expected);
                    pos += 1;
                }
            }
        }
    }
}
