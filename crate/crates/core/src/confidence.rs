//! Simultaneous confidence bounds for shifts `Δ_i` of each treatment
//! relative to the control, obtained by inverting the joint null
//! distribution of the Mann–Whitney statistics.
//!
//! With `D_i(j)` the j-th smallest treatment-minus-control difference,
//! `P(Δ_i ≤ D_i(j_i) ∀i) = P0(W_i ≤ j_i − 1 ∀i)` and
//! `P(Δ_i ≥ D_i(j_i) ∀i) = P0(W_i ≤ n0·ni − j_i ∀i)`. The indices come from a
//! common standardized threshold under the no-ties normal model, rounded
//! up, down and to nearest; each candidate's coverage is then evaluated.

use serde::{Deserialize, Serialize};

use crate::gauss::{joint_lower_box_prob, solve_common_threshold, FactorModel};
use crate::moments::untied_moments;
use crate::randomization::{enumerate_doubled_w, DEFAULT_SPLIT_BUDGET};
use crate::ranks::RankedSamples;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upper,
    Lower,
    Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    Up,
    Down,
    Nearest,
    /// Every index at its maximum; used when no candidate reaches γ.
    Max,
}

/// Sorted treatment-minus-control differences.
pub fn pairwise_differences(control: &[f64], treatment: &[f64]) -> Result<Vec<f64>> {
    if control.is_empty() || treatment.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut d: Vec<f64> = treatment.iter().flat_map(|&y| control.iter().map(move |&x| y - x)).collect();
    if let Some(i) = d.iter().position(|v| v.is_nan()) {
        return Err(Error::NonOrderable(i));
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexChoice {
    pub rounding: Rounding,
    /// 1-based order-statistic index per treatment, for the requested direction.
    pub j: Vec<usize>,
    /// Approximate simultaneous coverage.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSelection {
    pub direction: Direction,
    pub gamma: f64,
    /// Common standardized threshold `u*`.
    pub threshold: f64,
    pub candidates: Vec<IndexChoice>,
    /// Closest to γ among candidates with coverage ≥ γ.
    pub conservative: IndexChoice,
    /// Closest to γ overall.
    pub closest: IndexChoice,
    pub unreachable: bool,
}

fn upper_box_coverage(model: &FactorModel, j_upper: &[usize]) -> Result<f64> {
    let c: Vec<f64> = j_upper.iter().map(|&j| j as f64 - 1.0).collect();
    joint_lower_box_prob(model, &c)
}

/// Chooses order-statistic indices for one-sided bounds at level `gamma`.
/// The model should carry no-ties variances.
pub fn select_indices(model: &FactorModel, gamma: f64, direction: Direction) -> Result<IndexSelection> {
    if direction == Direction::Interval {
        return Err(Error::param("select_indices handles one-sided bounds; use upper or lower"));
    }
    let u = solve_common_threshold(model, gamma)?;
    let k = model.treatments();
    let max_j: Vec<usize> = (0..k).map(|i| model.control_size() * model.sizes()[i]).collect();
    let target: Vec<f64> = (0..k).map(|i| model.mu(i) + u * model.tau()[i] + 1.0).collect();

    let reflect = |j: &[usize]| -> Vec<usize> {
        match direction {
            Direction::Lower => j.iter().zip(&max_j).map(|(&j, &m)| m + 1 - j).collect(),
            _ => j.to_vec(),
        }
    };
    let build = |rounding: Rounding, round: &dyn Fn(f64) -> f64| -> Result<IndexChoice> {
        let j_upper: Vec<usize> =
            target.iter().zip(&max_j).map(|(&t, &m)| (round(t).max(1.0) as usize).min(m)).collect();
        Ok(IndexChoice { rounding, coverage: upper_box_coverage(model, &j_upper)?, j: reflect(&j_upper) })
    };
    let candidates = vec![
        build(Rounding::Up, &f64::ceil)?,
        build(Rounding::Down, &f64::floor)?,
        build(Rounding::Nearest, &f64::round)?,
    ];

    let closest = candidates
        .iter()
        .min_by(|a, b| (a.coverage - gamma).abs().total_cmp(&(b.coverage - gamma).abs()))
        .cloned()
        .expect("three candidates");
    let reached =
        candidates.iter().filter(|c| c.coverage >= gamma).min_by(|a, b| a.coverage.total_cmp(&b.coverage)).cloned();
    let (conservative, unreachable) = match reached {
        Some(c) => (c, false),
        None => {
            let choice = IndexChoice {
                rounding: Rounding::Max,
                coverage: upper_box_coverage(model, &max_j)?,
                j: reflect(&max_j),
            };
            (choice, true)
        }
    };
    Ok(IndexSelection { direction, gamma, threshold: u, candidates, conservative, closest, unreachable })
}

/// Exact continuous-model coverage `P0(W_i ≤ j_i − 1 ∀i)` (upper) or
/// `P0(W_i ≤ n0·ni − j_i ∀i)` (lower), by enumeration.
pub fn exact_coverage(sizes: &[usize], j: &[usize], direction: Direction) -> Result<f64> {
    if sizes.len() != j.len() + 1 {
        return Err(Error::DimensionMismatch { expected: sizes.len().saturating_sub(1), got: j.len() });
    }
    let mut next = 0.0;
    let groups: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&n| {
            (0..n)
                .map(|_| {
                    next += 1.0;
                    next
                })
                .collect()
        })
        .collect();
    let samples = RankedSamples::new(&groups)?;
    let (points, total) = enumerate_doubled_w(&samples, DEFAULT_SPLIT_BUDGET)?;
    let limits: Vec<i64> = j
        .iter()
        .zip(&sizes[1..])
        .map(|(&j, &ni)| {
            let m = (sizes[0] * ni) as i64;
            match direction {
                Direction::Lower => 2 * (m - j as i64),
                _ => 2 * (j as i64 - 1),
            }
        })
        .collect();
    let hits: u128 = points.iter().filter(|(w2, _)| w2.iter().zip(&limits).all(|(w, l)| w <= l)).map(|(_, c)| c).sum();
    Ok(hits as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftBound {
    /// Order-statistic index of the chosen (conservative) bound.
    pub index: usize,
    pub value: f64,
    pub closest_index: usize,
    pub closest_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceResult {
    pub direction: Direction,
    pub nominal_gamma: f64,
    /// Level of each one-sided bound: γ, or (1+γ)/2 for intervals.
    pub one_sided_level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<ShiftBound>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<ShiftBound>>,
    /// Approximate simultaneous coverage of the one-sided bound set.
    pub achieved_conservative: f64,
    pub achieved_closest: f64,
    pub widened_by: f64,
    pub unreachable: bool,
    pub warnings: Vec<String>,
}

fn model_for(groups: &[Vec<f64>]) -> Result<FactorModel> {
    if groups.len() < 2 {
        return Err(Error::param("need a control and at least one treatment"));
    }
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    if sizes.contains(&0) {
        return Err(Error::EmptySample);
    }
    FactorModel::from_moments(&untied_moments(&sizes)?)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("rounding epsilon must be finite and nonnegative, got {eps}")))
    }
}

fn tie_warning(groups: &[Vec<f64>], eps: f64) -> Result<Option<String>> {
    let samples = RankedSamples::new(groups)?;
    Ok((samples.tie_pattern().has_ties() && eps == 0.0).then(|| {
        "data contain ties; the shift model assumes continuous data, consider a rounding epsilon > 0".to_string()
    }))
}

fn bounds_for(groups: &[Vec<f64>], selection: &IndexSelection, eps: f64) -> Result<Vec<ShiftBound>> {
    let sign = if selection.direction == Direction::Lower { -1.0 } else { 1.0 };
    groups[1..]
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let d = pairwise_differences(&groups[0], t)?;
            let (j, jc) = (selection.conservative.j[i], selection.closest.j[i]);
            Ok(ShiftBound {
                index: j,
                value: d[j - 1] + sign * eps,
                closest_index: jc,
                closest_value: d[jc - 1] + sign * eps,
            })
        })
        .collect()
}

/// One-sided simultaneous bounds for every treatment (group 0 is control).
pub fn simultaneous_bounds(
    groups: &[Vec<f64>],
    gamma: f64,
    direction: Direction,
    rounding_eps: f64,
) -> Result<ConfidenceResult> {
    simultaneous_bounds_with(groups, gamma, direction, rounding_eps, None)
}

/// As [`simultaneous_bounds`], with an optional quadrature node count.
pub fn simultaneous_bounds_with(
    groups: &[Vec<f64>],
    gamma: f64,
    direction: Direction,
    rounding_eps: f64,
    nodes: Option<usize>,
) -> Result<ConfidenceResult> {
    check_eps(rounding_eps)?;
    if direction == Direction::Interval {
        return simultaneous_intervals_with(groups, gamma, rounding_eps, nodes);
    }
    let mut model = model_for(groups)?;
    if let Some(n) = nodes {
        model = model.with_nodes(n)?;
    }
    let mut warnings: Vec<String> = tie_warning(groups, rounding_eps)?.into_iter().collect();
    let selection = select_indices(&model, gamma, direction)?;
    if selection.unreachable {
        warnings
            .push(format!("conservative target unreachable: level {gamma} exceeds the largest attainable coverage"));
    }
    let bounds = bounds_for(groups, &selection, rounding_eps)?;
    let (lower, upper) = match direction {
        Direction::Lower => (Some(bounds), None),
        _ => (None, Some(bounds)),
    };
    Ok(ConfidenceResult {
        direction,
        nominal_gamma: gamma,
        one_sided_level: gamma,
        lower,
        upper,
        achieved_conservative: selection.conservative.coverage,
        achieved_closest: selection.closest.coverage,
        widened_by: rounding_eps,
        unreachable: selection.unreachable,
        warnings,
    })
}

/// Two-sided simultaneous intervals from lower and upper bounds, each at
/// level (1+γ)/2.
pub fn simultaneous_intervals(groups: &[Vec<f64>], gamma: f64, rounding_eps: f64) -> Result<ConfidenceResult> {
    simultaneous_intervals_with(groups, gamma, rounding_eps, None)
}

pub fn simultaneous_intervals_with(
    groups: &[Vec<f64>],
    gamma: f64,
    rounding_eps: f64,
    nodes: Option<usize>,
) -> Result<ConfidenceResult> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let level = (1.0 + gamma) / 2.0;
    let lower = simultaneous_bounds_with(groups, level, Direction::Lower, rounding_eps, nodes)?;
    let upper = simultaneous_bounds_with(groups, level, Direction::Upper, rounding_eps, nodes)?;
    let mut warnings = lower.warnings.clone();
    for w in upper.warnings {
        if !warnings.contains(&w) {
            warnings.push(w);
        }
    }
    let (lo, hi) = (lower.lower.unwrap(), upper.upper.unwrap());
    if lo.iter().zip(&hi).any(|(l, h)| l.value > h.value) {
        return Err(Error::Numeric("interval lower bound exceeds upper bound".into()));
    }
    Ok(ConfidenceResult {
        direction: Direction::Interval,
        nominal_gamma: gamma,
        one_sided_level: level,
        lower: Some(lo),
        upper: Some(hi),
        achieved_conservative: lower.achieved_conservative.min(upper.achieved_conservative),
        achieved_closest: lower.achieved_closest.min(upper.achieved_closest),
        widened_by: rounding_eps,
        unreachable: lower.unreachable || upper.unreachable,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::joint_lower_box_prob;
    use crate::testutil::*;

    fn untied_model(sizes: &[usize]) -> FactorModel {
        FactorModel::from_moments(&untied_moments(sizes).unwrap()).unwrap()
    }

    #[test]
    fn differences() {
        assert_eq!(pairwise_differences(&[1.0, 3.0], &[2.0, 6.0]).unwrap(), vec![-1.0, 1.0, 3.0, 5.0]);
        assert_eq!(pairwise_differences(&[0.0], &[5.0]).unwrap(), vec![5.0]);
        let x = [1.0, 2.5, 4.0, 7.0];
        let d = pairwise_differences(&x, &x).unwrap();
        assert_eq!(d.len(), 16);
        assert_eq!(d.iter().filter(|&&v| v == 0.0).count(), 4);
        assert!(pairwise_differences(&[], &[1.0]).is_err());
    }

    /// Exact Mann–Whitney(6,6) cdf from all 924 splits.
    fn exact_mw66(c: usize) -> f64 {
        let pooled: Vec<f64> = (1..=12).map(f64::from).collect();
        let mut hits = 0;
        let total = for_each_split(&[6, 6], |labels| {
            let g = split_groups(&pooled, labels, 2);
            if mw_direct(&g[0], &g[1]) <= c as f64 {
                hits += 1;
            }
        });
        hits as f64 / total as f64
    }

    #[test]
    fn k1_indices_match_exact_wilcoxon() {
        let model = untied_model(&[6, 6]);
        let sel = select_indices(&model, 0.95, Direction::Upper).unwrap();
        assert!(!sel.unreachable);
        assert!(sel.conservative.coverage >= 0.95);
        for cand in &sel.candidates {
            let exact = exact_mw66(cand.j[0] - 1);
            assert!((cand.coverage - exact).abs() < 0.02, "{cand:?} vs {exact}");
            assert!((exact_coverage(&[6, 6], &cand.j, Direction::Upper).unwrap() - exact).abs() < 1e-15);
            let direct = joint_lower_box_prob(&model, &[cand.j[0] as f64 - 1.0]).unwrap();
            assert!((cand.coverage - direct).abs() < 1e-12);
        }
        // Lehmann's construction with the normal cdf: smallest j with coverage ≥ γ.
        let lehmann =
            (1..=36).find(|&j| crate::gauss::std_normal_cdf((j as f64 - 1.0 - 18.0) / 39f64.sqrt()) >= 0.95).unwrap();
        assert_eq!(sel.conservative.j[0], lehmann);
    }

    #[test]
    fn clamps_when_unreachable() {
        let model = untied_model(&[4, 3, 5]);
        let sel = select_indices(&model, 1.0 - 1e-12, Direction::Upper).unwrap();
        assert!(sel.unreachable);
        assert_eq!(sel.conservative.j, vec![12, 20]);
        assert_eq!(sel.conservative.rounding, Rounding::Max);
    }

    #[test]
    fn lower_indices_reflect_upper() {
        let model = untied_model(&[5, 4, 7]);
        let up = select_indices(&model, 0.9, Direction::Upper).unwrap();
        let lo = select_indices(&model, 0.9, Direction::Lower).unwrap();
        for (a, b) in up.candidates.iter().zip(&lo.candidates) {
            assert_eq!(a.coverage, b.coverage);
            for i in 0..2 {
                let m = 5 * [4, 7][i];
                assert_eq!(b.j[i], m + 1 - a.j[i]);
            }
        }
        assert!(select_indices(&model, 0.9, Direction::Interval).is_err());
    }

    #[test]
    fn coverage_monotone_in_index() {
        let model = untied_model(&[5, 4, 7]);
        let mut prev = 0.0;
        for j in 1..=20 {
            let c = upper_box_coverage(&model, &[j, 17]).unwrap();
            assert!(c >= prev);
            prev = c;
        }
    }

    fn fixture() -> Vec<Vec<f64>> {
        vec![
            vec![10.2, 11.6, 9.8, 12.4, 10.0, 11.0, 13.2],
            vec![12.8, 13.4, 11.2, 14.6, 12.2, 15.0],
            vec![9.4, 10.6, 8.8, 11.4, 9.6, 10.8, 12.0],
        ]
    }

    #[test]
    fn widening_by_epsilon() {
        let g = fixture();
        let plain = simultaneous_bounds(&g, 0.95, Direction::Upper, 0.0).unwrap();
        let wide = simultaneous_bounds(&g, 0.95, Direction::Upper, 0.2).unwrap();
        for (a, b) in plain.upper.unwrap().iter().zip(wide.upper.unwrap()) {
            assert_eq!(a.index, b.index);
            assert!((b.value - a.value - 0.2).abs() < 1e-12);
        }
        let plain = simultaneous_bounds(&g, 0.95, Direction::Lower, 0.0).unwrap();
        let wide = simultaneous_bounds(&g, 0.95, Direction::Lower, 0.2).unwrap();
        for (a, b) in plain.lower.unwrap().iter().zip(wide.lower.unwrap()) {
            assert!((a.value - b.value - 0.2).abs() < 1e-12);
        }
        assert!(simultaneous_bounds(&g, 0.95, Direction::Upper, -0.1).is_err());
    }

    #[test]
    fn shift_and_scale_equivariance() {
        let g = fixture();
        let base = simultaneous_intervals(&g, 0.9, 0.0).unwrap();
        let mut shifted = g.clone();
        shifted[2].iter_mut().for_each(|v| *v += 3.25);
        let moved = simultaneous_intervals(&shifted, 0.9, 0.0).unwrap();
        let (bl, bu) = (base.lower.as_ref().unwrap(), base.upper.as_ref().unwrap());
        let (ml, mu) = (moved.lower.as_ref().unwrap(), moved.upper.as_ref().unwrap());
        assert_eq!(bl[0].value, ml[0].value);
        assert!((ml[1].value - bl[1].value - 3.25).abs() < 1e-12);
        assert!((mu[1].value - bu[1].value - 3.25).abs() < 1e-12);

        let scaled: Vec<Vec<f64>> = g.iter().map(|s| s.iter().map(|v| v * 2.0).collect()).collect();
        let sc = simultaneous_intervals(&scaled, 0.9, 0.0).unwrap();
        for (a, b) in bu.iter().zip(sc.upper.as_ref().unwrap()) {
            assert!((b.value - 2.0 * a.value).abs() < 1e-12);
        }
    }

    #[test]
    fn interval_is_two_bounds_at_half_level() {
        let g = fixture();
        let iv = simultaneous_intervals(&g, 0.90, 0.1).unwrap();
        assert!((iv.one_sided_level - 0.95).abs() < 1e-15);
        let lo = simultaneous_bounds(&g, 0.95, Direction::Lower, 0.1).unwrap();
        let up = simultaneous_bounds(&g, 0.95, Direction::Upper, 0.1).unwrap();
        assert_eq!(iv.lower, lo.lower);
        assert_eq!(iv.upper, up.upper);
        for (l, u) in iv.lower.unwrap().iter().zip(iv.upper.unwrap()) {
            assert!(l.value <= u.value);
        }
    }

    #[test]
    fn identical_samples_cover_zero() {
        let x = vec![3.1, 4.7, 2.2, 5.9, 4.1, 3.3, 6.0, 2.9];
        let g = vec![x.clone(), x.clone(), x];
        let iv = simultaneous_intervals(&g, 0.8, 0.0).unwrap();
        for (l, u) in iv.lower.unwrap().iter().zip(iv.upper.unwrap()) {
            assert!(l.value <= 0.0 && 0.0 <= u.value);
        }
        assert!(!iv.warnings.is_empty(), "identical samples are tied");
    }

    #[test]
    fn near_one_spans_all_differences() {
        let g = fixture();
        let iv = simultaneous_intervals(&g, 1.0 - 1e-12, 0.2).unwrap();
        assert!(iv.unreachable);
        for (i, t) in g[1..].iter().enumerate() {
            let d = pairwise_differences(&g[0], t).unwrap();
            assert!((iv.lower.as_ref().unwrap()[i].value - (d[0] - 0.2)).abs() < 1e-12);
            assert!((iv.upper.as_ref().unwrap()[i].value - (d[d.len() - 1] + 0.2)).abs() < 1e-12);
        }
    }
}
