//! Observed Mann–Whitney values and the standardized Steel statistics.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::moments::MomentSet;
use crate::ranks::RankedSamples;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// Some treatment shifts scores upward; uses the maximum.
    Greater,
    /// Some treatment shifts scores downward; uses the minimum.
    Less,
    /// Either direction; uses the maximum absolute value.
    TwoSided,
}

impl Alternative {
    /// Steel statistic for this alternative from standardized coordinates.
    pub fn reduce(self, standardized: &[f64]) -> f64 {
        match self {
            Alternative::Greater => standardized.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Alternative::Less => standardized.iter().copied().fold(f64::INFINITY, f64::min),
            Alternative::TwoSided => standardized.iter().fold(f64::NEG_INFINITY, |m, x| m.max(x.abs())),
        }
    }

    /// Whether `value` is at least as extreme as `observed`. Values within
    /// [`TAIL_TOLERANCE`] of the observed statistic count as ties and are
    /// included.
    pub fn in_tail(self, value: f64, observed: f64) -> bool {
        match self {
            Alternative::Greater | Alternative::TwoSided => value >= observed - TAIL_TOLERANCE,
            Alternative::Less => value <= observed + TAIL_TOLERANCE,
        }
    }
}

/// Standardized statistics closer than this are treated as equal when
/// counting tail mass; it absorbs floating rounding between algebraically
/// identical values.
pub const TAIL_TOLERANCE: f64 = 1e-10;

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alternative::Greater => "greater",
            Alternative::Less => "less",
            Alternative::TwoSided => "two-sided",
        })
    }
}

impl FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greater" => Ok(Alternative::Greater),
            "less" => Ok(Alternative::Less),
            "two-sided" | "two_sided" => Ok(Alternative::TwoSided),
            other => Err(Error::param(format!("unknown alternative '{other}'"))),
        }
    }
}

/// `W*(X, Y) = #{x < y} + ½ #{x = y}` over all pairs, via a sorted merge.
pub fn mann_whitney_star(control: &[f64], treatment: &[f64]) -> Result<f64> {
    if control.is_empty() || treatment.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(i) = control.iter().chain(treatment).position(|v| v.is_nan()) {
        return Err(Error::NonOrderable(i));
    }
    let mut x = control.to_vec();
    let mut y = treatment.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    y.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));

    // Twice the statistic, so everything stays integral.
    let mut doubled: u64 = 0;
    let (mut below, mut through) = (0usize, 0usize);
    for &v in &y {
        while below < x.len() && x[below] < v {
            below += 1;
        }
        through = through.max(below);
        while through < x.len() && x[through] <= v {
            through += 1;
        }
        doubled += (below + through) as u64;
    }
    Ok(doubled as f64 / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteelObservation {
    pub w_star: Vec<f64>,
    pub standardized: Vec<f64>,
    pub s_max: f64,
    pub s_min: f64,
    pub s_abs: f64,
    pub alternative: Alternative,
    /// Treatments (0-based) whose variance is zero; their standardized value is 0.
    pub degenerate: Vec<usize>,
}

impl SteelObservation {
    /// The statistic selected by the alternative.
    pub fn statistic(&self) -> f64 {
        match self.alternative {
            Alternative::Greater => self.s_max,
            Alternative::Less => self.s_min,
            Alternative::TwoSided => self.s_abs,
        }
    }

    /// Wilcoxon rank sums `W*_i + ni(ni+1)/2` within each control/treatment pair.
    pub fn rank_sums(&self, treatment_sizes: &[usize]) -> Vec<f64> {
        self.w_star.iter().zip(treatment_sizes).map(|(w, &n)| w + (n * (n + 1)) as f64 / 2.0).collect()
    }
}

/// Builds the observation from already computed Mann–Whitney values.
pub fn observation_from_w(w_star: Vec<f64>, moments: &MomentSet, alternative: Alternative) -> Result<SteelObservation> {
    if w_star.len() != moments.treatments() {
        return Err(Error::DimensionMismatch { expected: moments.treatments(), got: w_star.len() });
    }
    let standardized: Vec<f64> = w_star.iter().enumerate().map(|(i, &w)| moments.standardize(i, w)).collect();
    let degenerate = (0..w_star.len()).filter(|&i| moments.tau2[i] <= 0.0).collect();
    Ok(SteelObservation {
        s_max: Alternative::Greater.reduce(&standardized),
        s_min: Alternative::Less.reduce(&standardized),
        s_abs: Alternative::TwoSided.reduce(&standardized),
        w_star,
        standardized,
        alternative,
        degenerate,
    })
}

/// Steel statistics for the control (group 0) against each treatment.
pub fn steel_statistics(
    samples: &RankedSamples,
    moments: &MomentSet,
    alternative: Alternative,
) -> Result<SteelObservation> {
    if samples.sizes() != moments.sizes.as_slice() {
        return Err(Error::DimensionMismatch { expected: moments.sizes.len(), got: samples.sizes().len() });
    }
    let control = samples.group_midranks(0);
    let w_star = (1..samples.group_count())
        .map(|g| mann_whitney_star(&control, &samples.group_midranks(g)))
        .collect::<Result<Vec<_>>>()?;
    observation_from_w(w_star, moments, alternative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::factor_decomposition;
    use crate::testutil::*;
    use proptest::prelude::*;

    #[test]
    fn mann_whitney_examples() {
        assert_eq!(mann_whitney_star(&[1.5, 1.5], &[3.0, 5.0]).unwrap(), 4.0);
        assert_eq!(mann_whitney_star(&[1.5, 5.0], &[1.5, 5.0]).unwrap(), 2.0);
        assert_eq!(mann_whitney_star(&[], &[1.0]), Err(Error::EmptySample));
    }

    #[test]
    fn steel_iq_values() {
        let control = &STEEL_IQ[0];
        let w: Vec<f64> = STEEL_IQ[1..].iter().map(|t| mann_whitney_star(control, t).unwrap()).collect();
        assert_eq!(w, vec![7.0, 17.0, 12.5]);

        let samples = RankedSamples::new(&STEEL_IQ).unwrap();
        let m = factor_decomposition(samples.sizes(), samples.tie_pattern()).unwrap();
        let obs = steel_statistics(&samples, &m, Alternative::Less).unwrap();
        assert_eq!(obs.w_star, vec![7.0, 17.0, 12.5]);
        assert!((obs.s_min - -1.7713).abs() < 5e-5, "{}", obs.s_min);
        assert_eq!(obs.statistic(), obs.s_min);
        assert_eq!(obs.rank_sums(&[6, 6, 6]), vec![28.0, 38.0, 33.5]);
    }

    #[test]
    fn fully_tied_is_degenerate() {
        let samples = RankedSamples::new(&[vec![4.0; 3], vec![4.0; 2], vec![4.0; 5]]).unwrap();
        let m = factor_decomposition(samples.sizes(), samples.tie_pattern()).unwrap();
        let obs = steel_statistics(&samples, &m, Alternative::Greater).unwrap();
        assert_eq!(obs.standardized, vec![0.0, 0.0]);
        assert_eq!((obs.s_max, obs.s_min, obs.s_abs), (0.0, 0.0, 0.0));
        assert_eq!(obs.degenerate, vec![0, 1]);
    }

    #[test]
    fn small_split_example() {
        let samples = RankedSamples::new(&[vec![1.0, 1.0], vec![2.0, 3.0], vec![3.0, 3.0]]).unwrap();
        let m = factor_decomposition(samples.sizes(), samples.tie_pattern()).unwrap();
        let obs = steel_statistics(&samples, &m, Alternative::TwoSided).unwrap();
        assert_eq!(obs.w_star, vec![4.0, 4.0]);
        let z = 2.0 / (41.0f64 / 30.0).sqrt();
        assert!((obs.standardized[0] - z).abs() < 1e-12);
        assert!((obs.s_abs - 1.7108).abs() < 1e-4);
    }

    #[test]
    fn mismatched_moments_rejected() {
        let samples = RankedSamples::new(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let m = crate::moments::untied_moments(&[1, 3]).unwrap();
        assert!(steel_statistics(&samples, &m, Alternative::Greater).is_err());
        assert!(observation_from_w(vec![1.0, 2.0], &m, Alternative::Greater).is_err());
    }

    #[test]
    fn equal_sizes_rank_like_raw_w() {
        let groups = vec![vec![1.0, 5.0, 7.0], vec![2.0, 9.0, 9.0], vec![3.0, 4.0, 8.0], vec![6.0, 10.0, 11.0]];
        let samples = RankedSamples::new(&groups).unwrap();
        let m = factor_decomposition(samples.sizes(), samples.tie_pattern()).unwrap();
        let obs = steel_statistics(&samples, &m, Alternative::Greater).unwrap();
        let argmax = |v: &[f64]| (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        assert_eq!(argmax(&obs.standardized), argmax(&obs.w_star));
    }

    #[test]
    fn alternative_parsing() {
        assert_eq!("two-sided".parse::<Alternative>().unwrap(), Alternative::TwoSided);
        assert_eq!(Alternative::Less.to_string(), "less");
        assert!("both".parse::<Alternative>().is_err());
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((0i32..8).prop_map(f64::from), 1..12)
    }

    proptest! {
        #[test]
        fn merge_matches_double_loop(x in sample(), y in sample()) {
            prop_assert_eq!(mann_whitney_star(&x, &y).unwrap(), mw_direct(&x, &y));
        }

        #[test]
        fn antisymmetric(x in sample(), y in sample()) {
            let total = (x.len() * y.len()) as f64;
            prop_assert_eq!(mann_whitney_star(&x, &y).unwrap() + mann_whitney_star(&y, &x).unwrap(), total);
        }

        #[test]
        fn shift_invariant(x in sample(), y in sample(), c in -50i32..50) {
            let s = |v: &[f64]| v.iter().map(|a| a + f64::from(c)).collect::<Vec<_>>();
            prop_assert_eq!(mann_whitney_star(&x, &y).unwrap(), mann_whitney_star(&s(&x), &s(&y)).unwrap());
        }

        #[test]
        fn abs_is_max_of_extremes(z in prop::collection::vec(-5.0f64..5.0, 1..6)) {
            let abs = Alternative::TwoSided.reduce(&z);
            let hi = Alternative::Greater.reduce(&z);
            let lo = Alternative::Less.reduce(&z);
            prop_assert_eq!(abs, hi.max(-lo));
        }
    }
}
