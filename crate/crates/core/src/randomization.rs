//! The conditional randomization distribution: every split of the pooled
//! midranks into groups of the observed sizes is equally likely.
//!
//! Exact mode enumerates allocations of each tie block to the groups rather
//! than labeled splits, weighting each allocation by its multinomial count.
//! Monte Carlo mode reshuffles the pooled sample; replicates are cut into
//! fixed chunks, each with its own ChaCha stream derived from the seed, so
//! results do not depend on how many threads run the chunks.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::moments::{factor_decomposition, MomentSet};
use crate::ranks::RankedSamples;
use crate::statistics::{Alternative, SteelObservation};
use crate::{Error, Result};

pub const DEFAULT_SPLIT_BUDGET: u64 = 10_000_000;

/// Replicates per random stream.
pub const CHUNK_SIZE: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    SMax,
    SMin,
    SAbs,
    /// The vector of raw Mann–Whitney values.
    VectorW,
}

impl From<Alternative> for Statistic {
    fn from(alt: Alternative) -> Self {
        match alt {
            Alternative::Greater => Statistic::SMax,
            Alternative::Less => Statistic::SMin,
            Alternative::TwoSided => Statistic::SAbs,
        }
    }
}

impl Statistic {
    fn alternative(self) -> Option<Alternative> {
        match self {
            Statistic::SMax => Some(Alternative::Greater),
            Statistic::SMin => Some(Alternative::Less),
            Statistic::SAbs => Some(Alternative::TwoSided),
            Statistic::VectorW => None,
        }
    }
}

/// A weighted null distribution. Scalar statistics have one-element support
/// points sorted ascending; `VectorW` points are the Mann–Whitney vectors in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSample {
    pub statistic: Statistic,
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<u128>,
    pub total: u128,
}

impl NullSample {
    /// Mass at least as extreme as `observed` in the direction of `alt`,
    /// ties included.
    pub fn tail_mass(&self, alt: Alternative, observed: f64) -> u128 {
        self.support.iter().zip(&self.weights).filter(|(v, _)| alt.in_tail(v[0], observed)).map(|(_, &w)| w).sum()
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.support.iter().zip(&self.weights).map(|(v, &w)| v[i] * w as f64).sum::<f64>() / self.total as f64
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        let (mi, mj) = (self.mean(i), self.mean(j));
        self.support.iter().zip(&self.weights).map(|(v, &w)| (v[i] - mi) * (v[j] - mj) * w as f64).sum::<f64>()
            / self.total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub estimate: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nsim: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl PValue {
    pub fn asymptotic(estimate: f64) -> Self {
        PValue {
            estimate: estimate.clamp(0.0, 1.0),
            method: Method::Asymptotic,
            nsim: None,
            std_error: None,
            seed: None,
        }
    }
}

/// Monte Carlo settings shared by every simulation entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub nsim: u64,
    pub seed: u64,
    /// Worker cap; `None` uses the ambient rayon pool. Never affects results.
    pub threads: Option<usize>,
    /// Report `(hits + 1)/(nsim + 1)` instead of `hits/nsim`.
    pub plus_one: bool,
}

impl MonteCarlo {
    pub fn new(nsim: u64, seed: u64) -> Self {
        MonteCarlo { nsim, seed, threads: None, plus_one: false }
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.nsim == 0 {
            return Err(Error::param("nsim must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::param("thread count must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn p_value(&self, hits: u64) -> PValue {
        let estimate =
            if self.plus_one { (hits + 1) as f64 / (self.nsim + 1) as f64 } else { hits as f64 / self.nsim as f64 };
        PValue {
            estimate,
            method: Method::MonteCarlo,
            nsim: Some(self.nsim),
            std_error: Some((estimate * (1.0 - estimate) / self.nsim as f64).sqrt()),
            seed: Some(self.seed),
        }
    }
}

fn binomial_table(max: usize) -> Vec<Vec<u128>> {
    let mut rows: Vec<Vec<u128>> = Vec::with_capacity(max + 1);
    for n in 0..=max {
        let mut row = vec![1u128; n + 1];
        for k in 1..n {
            row[k] = rows[n - 1][k - 1].saturating_add(rows[n - 1][k]);
        }
        rows.push(row);
    }
    rows
}

fn multinomial(total: usize, parts: &[usize]) -> Option<u128> {
    let mut left = total;
    let mut acc: u128 = 1;
    for &p in parts {
        // C(left, p) by the multiplicative formula, exact at every step.
        let mut c: u128 = 1;
        for i in 0..p as u128 {
            c = c.checked_mul(left as u128 - i)? / (i + 1);
        }
        acc = acc.checked_mul(c)?;
        left -= p;
    }
    Some(acc)
}

/// Weighted distribution of doubled Mann–Whitney vectors `2·W*(X0, Xg)`,
/// g = 1..G−1, enumerated over tie-block allocations.
struct Enumerator<'a> {
    counts: &'a [u64],
    groups: usize,
    binom: Vec<Vec<u128>>,
    budget: u64,
    leaves: u64,
    out: HashMap<Vec<i64>, u128>,
}

impl Enumerator<'_> {
    fn run(&mut self, value: usize, cap: &mut [usize], below0: i64, w2: &mut [i64], weight: u128) -> Result<()> {
        if value == self.counts.len() {
            self.leaves += 1;
            if self.leaves > self.budget {
                return Err(Error::BudgetExceeded { budget: self.budget });
            }
            *self.out.entry(w2.to_vec()).or_insert(0) += weight;
            return Ok(());
        }
        let d = self.counts[value] as usize;
        let mut alloc = vec![0usize; self.groups];
        self.compose(value, 0, d, cap, &mut alloc, below0, w2, weight)
    }

    #[allow(clippy::too_many_arguments)]
    fn compose(
        &mut self,
        value: usize,
        g: usize,
        left: usize,
        cap: &mut [usize],
        alloc: &mut [usize],
        below0: i64,
        w2: &mut [i64],
        weight: u128,
    ) -> Result<()> {
        if g == self.groups - 1 {
            if left > cap[g] {
                return Ok(());
            }
            alloc[g] = left;
            let c0 = alloc[0] as i64;
            for t in 1..self.groups {
                w2[t - 1] += alloc[t] as i64 * (2 * below0 + c0);
            }
            for t in 0..self.groups {
                cap[t] -= alloc[t];
            }
            let result = self.run(value + 1, cap, below0 + c0, w2, weight);
            for t in 0..self.groups {
                cap[t] += alloc[t];
            }
            for t in 1..self.groups {
                w2[t - 1] -= alloc[t] as i64 * (2 * below0 + c0);
            }
            return result;
        }
        let room_after: usize = cap[g + 1..].iter().sum();
        let lo = left.saturating_sub(room_after);
        let hi = left.min(cap[g]);
        for c in lo..=hi {
            alloc[g] = c;
            let w = weight
                .checked_mul(self.binom[left][c])
                .ok_or_else(|| Error::Numeric("split count overflows 128 bits".into()))?;
            self.compose(value, g + 1, left - c, cap, alloc, below0, w2, w)?;
        }
        Ok(())
    }
}

/// Weighted support of the doubled Mann–Whitney vector, and the split count.
pub type DoubledDistribution = (Vec<(Vec<i64>, u128)>, u128);

/// Distribution of the doubled Mann–Whitney vector (control = group 0).
/// Returns support points in lexicographic order and the total split count.
pub fn enumerate_doubled_w(samples: &RankedSamples, budget: u64) -> Result<DoubledDistribution> {
    let sizes = samples.sizes();
    let total =
        multinomial(samples.total(), sizes).ok_or_else(|| Error::Numeric("split count overflows 128 bits".into()))?;
    let counts = samples.tie_pattern().counts();
    let max_d = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut e = Enumerator {
        counts,
        groups: sizes.len(),
        binom: binomial_table(max_d),
        budget,
        leaves: 0,
        out: HashMap::new(),
    };
    let mut cap = sizes.to_vec();
    let mut w2 = vec![0i64; sizes.len() - 1];
    e.run(0, &mut cap, 0, &mut w2, 1)?;
    let mut points: Vec<(Vec<i64>, u128)> = e.out.into_iter().collect();
    points.sort();
    debug_assert_eq!(points.iter().map(|p| p.1).sum::<u128>(), total);
    Ok((points, total))
}

fn statistic_of(stat: Statistic, w: &[f64], moments: &MomentSet) -> f64 {
    let z: Vec<f64> = w.iter().enumerate().map(|(i, &x)| moments.standardize(i, x)).collect();
    stat.alternative().expect("scalar statistic").reduce(&z)
}

/// Exact null distribution under the default split budget.
pub fn exact_null_distribution(samples: &RankedSamples, statistic: Statistic) -> Result<NullSample> {
    exact_null_distribution_with_budget(samples, statistic, DEFAULT_SPLIT_BUDGET)
}

pub fn exact_null_distribution_with_budget(
    samples: &RankedSamples,
    statistic: Statistic,
    budget: u64,
) -> Result<NullSample> {
    let (points, total) = enumerate_doubled_w(samples, budget)?;
    let as_w = |w2: &[i64]| w2.iter().map(|&x| x as f64 / 2.0).collect::<Vec<f64>>();
    if statistic == Statistic::VectorW {
        let (support, weights) = points.iter().map(|(w2, c)| (as_w(w2), *c)).unzip();
        return Ok(NullSample { statistic, support, weights, total });
    }
    let moments = factor_decomposition(samples.sizes(), samples.tie_pattern())?;
    let mut scalar: Vec<(f64, u128)> =
        points.iter().map(|(w2, c)| (statistic_of(statistic, &as_w(w2), &moments), *c)).collect();
    scalar.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut support: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<u128> = Vec::new();
    for (v, c) in scalar {
        match support.last() {
            Some(last) if last[0] == v => *weights.last_mut().unwrap() += c,
            _ => {
                support.push(vec![v]);
                weights.push(c);
            }
        }
    }
    Ok(NullSample { statistic, support, weights, total })
}

/// Exact randomization p-value for the statistic picked by the
/// observation's alternative.
pub fn exact_p_value(samples: &RankedSamples, observation: &SteelObservation) -> Result<PValue> {
    exact_p_value_with_budget(samples, observation, DEFAULT_SPLIT_BUDGET)
}

pub fn exact_p_value_with_budget(
    samples: &RankedSamples,
    observation: &SteelObservation,
    budget: u64,
) -> Result<PValue> {
    let alt = observation.alternative;
    let null = exact_null_distribution_with_budget(samples, alt.into(), budget)?;
    let hits = null.tail_mass(alt, observation.statistic());
    Ok(PValue {
        estimate: hits as f64 / null.total as f64,
        method: Method::Exact,
        nsim: None,
        std_error: None,
        seed: None,
    })
}

/// Draws random splits of a pooled sample and tabulates how many copies of
/// each distinct value land in each group.
#[derive(Clone)]
pub struct SplitSampler {
    ids: Vec<u32>,
    sizes: Vec<usize>,
    distinct: usize,
    /// Group-major counts, `groups × distinct`.
    counts: Vec<u32>,
}

impl SplitSampler {
    pub fn new(samples: &RankedSamples) -> Self {
        let distinct = samples.tie_pattern().distinct();
        SplitSampler {
            ids: samples.value_ids().to_vec(),
            sizes: samples.sizes().to_vec(),
            distinct,
            counts: vec![0; samples.sizes().len() * distinct],
        }
    }

    pub fn draw<R: rand::Rng>(&mut self, rng: &mut R) {
        let last = *self.sizes.last().unwrap();
        let head = self.ids.len() - last;
        self.counts.iter_mut().for_each(|c| *c = 0);
        let (chosen, rest) = self.ids.partial_shuffle(rng, head);
        let mut start = 0;
        for (g, &n) in self.sizes[..self.sizes.len() - 1].iter().enumerate() {
            let row = &mut self.counts[g * self.distinct..(g + 1) * self.distinct];
            for &v in &chosen[start..start + n] {
                row[v as usize] += 1;
            }
            start += n;
        }
        let g = self.sizes.len() - 1;
        let row = &mut self.counts[g * self.distinct..];
        for &v in rest.iter() {
            row[v as usize] += 1;
        }
    }

    fn row(&self, g: usize) -> &[u32] {
        &self.counts[g * self.distinct..(g + 1) * self.distinct]
    }

    /// `2·W*(Xa, Xb)` for the current draw.
    pub fn doubled_w(&self, a: usize, b: usize) -> i64 {
        let (ra, rb) = (self.row(a), self.row(b));
        let mut below = 0i64;
        let mut acc = 0i64;
        for (&ca, &cb) in ra.iter().zip(rb) {
            acc += cb as i64 * (2 * below + ca as i64);
            below += ca as i64;
        }
        acc
    }
}

/// Runs `per_chunk(chunk_index, replicates, rng)` over all chunks, in chunk
/// order.
pub(crate) fn map_chunks<T, F>(mc: &MonteCarlo, per_chunk: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64, &mut ChaCha8Rng) -> T + Sync + Send,
{
    mc.validate()?;
    let chunks = mc.nsim.div_ceil(CHUNK_SIZE);
    let job = |c: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
        rng.set_stream(c);
        let reps = CHUNK_SIZE.min(mc.nsim - c * CHUNK_SIZE);
        per_chunk(c, reps, &mut rng)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || (0..chunks).into_par_iter().map(job).collect::<Vec<T>>();
        match mc.threads {
            Some(1) => Ok((0..chunks).map(job).collect()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
                Ok(pool.install(run))
            }
            None => Ok(run()),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok((0..chunks).map(job).collect())
    }
}

fn simulate_statistics(samples: &RankedSamples, alt: Alternative, mc: &MonteCarlo) -> Result<Vec<Vec<f64>>> {
    let moments = factor_decomposition(samples.sizes(), samples.tie_pattern())?;
    let base = SplitSampler::new(samples);
    let k = samples.group_count() - 1;
    map_chunks(mc, |_, reps, rng| {
        let mut sampler = base.clone();
        let mut z = vec![0.0; k];
        (0..reps)
            .map(|_| {
                sampler.draw(rng);
                for (i, zi) in z.iter_mut().enumerate() {
                    *zi = moments.standardize(i, sampler.doubled_w(0, i + 1) as f64 / 2.0);
                }
                alt.reduce(&z)
            })
            .collect()
    })
}

/// Monte Carlo randomization p-value; the proportion of simulated splits at
/// least as extreme as the observation.
pub fn simulate_p_value(samples: &RankedSamples, observation: &SteelObservation, mc: &MonteCarlo) -> Result<PValue> {
    let alt = observation.alternative;
    let observed = observation.statistic();
    let stats = simulate_statistics(samples, alt, mc)?;
    let hits = stats.iter().map(|chunk| chunk.iter().filter(|&&s| alt.in_tail(s, observed)).count() as u64).sum();
    Ok(mc.p_value(hits))
}

/// Simulated tail probabilities at each threshold from one shared run:
/// `P(S ≥ t)` for the greater and two-sided statistics, `P(S ≤ t)` for the
/// lower one.
pub fn simulated_tail_curve(
    samples: &RankedSamples,
    alternative: Alternative,
    thresholds: &[f64],
    mc: &MonteCarlo,
) -> Result<Vec<f64>> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param("thresholds must be sorted ascending"));
    }
    let mut all: Vec<f64> = simulate_statistics(samples, alternative, mc)?.concat();
    all.sort_by(f64::total_cmp);
    let n = all.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let hits = match alternative {
                Alternative::Less => all.partition_point(|&s| alternative.in_tail(s, t)),
                _ => all.len() - all.partition_point(|&s| !alternative.in_tail(s, t)),
            };
            hits as f64 / n
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::steel_statistics;
    use crate::testutil::*;

    fn ranked(groups: &[Vec<f64>]) -> RankedSamples {
        RankedSamples::new(groups).unwrap()
    }

    fn observe(samples: &RankedSamples, alt: Alternative) -> SteelObservation {
        let m = factor_decomposition(samples.sizes(), samples.tie_pattern()).unwrap();
        steel_statistics(samples, &m, alt).unwrap()
    }

    #[test]
    fn four_point_distribution() {
        let s = ranked(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let null = exact_null_distribution(&s, Statistic::VectorW).unwrap();
        assert_eq!(null.total, 6);
        let support: Vec<f64> = null.support.iter().map(|v| v[0]).collect();
        assert_eq!(support, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(null.weights, vec![1, 1, 2, 1, 1]);
    }

    #[test]
    fn exact_p_value_small() {
        let s = ranked(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let obs = observe(&s, Alternative::Greater);
        assert_eq!(obs.w_star, vec![4.0]);
        let p = exact_p_value(&s, &obs).unwrap();
        assert!((p.estimate - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(p.method, Method::Exact);

        let s = ranked(&[vec![3.0, 4.0], vec![1.0, 2.0]]);
        let obs = observe(&s, Alternative::Greater);
        assert_eq!(exact_p_value(&s, &obs).unwrap().estimate, 1.0);
    }

    #[test]
    fn fully_tied_point_mass() {
        let s = ranked(&[vec![2.0; 3], vec![2.0; 2], vec![2.0; 2]]);
        let null = exact_null_distribution(&s, Statistic::SMax).unwrap();
        assert_eq!(null.support, vec![vec![0.0]]);
        assert_eq!(null.total, 210);
        for alt in [Alternative::Greater, Alternative::Less, Alternative::TwoSided] {
            let obs = observe(&s, alt);
            assert_eq!(exact_p_value(&s, &obs).unwrap().estimate, 1.0);
            let mc = MonteCarlo::new(1000, 3);
            assert_eq!(simulate_p_value(&s, &obs, &mc).unwrap().estimate, 1.0);
        }
    }

    #[test]
    fn exact_variance_matches_formula() {
        let s = ranked(&[vec![1.0, 1.0], vec![2.0, 3.0], vec![3.0, 3.0]]);
        let null = exact_null_distribution(&s, Statistic::VectorW).unwrap();
        assert_eq!(null.total, 90);
        assert!((null.covariance(0, 0) - 41.0 / 30.0).abs() < 1e-12);
        assert!((null.covariance(0, 1) - 19.0 / 30.0).abs() < 1e-12);
        assert!((null.mean(1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_agrees_with_labeled_splits() {
        let groups = vec![vec![1.0, 1.0, 4.0], vec![2.0, 3.0], vec![3.0, 3.0, 4.0]];
        let s = ranked(&groups);
        let (points, total) = enumerate_doubled_w(&s, DEFAULT_SPLIT_BUDGET).unwrap();
        let mut brute: HashMap<Vec<i64>, u128> = HashMap::new();
        let pooled = s.midranks().to_vec();
        let n = for_each_split(s.sizes(), |labels| {
            let g = split_groups(&pooled, labels, 3);
            let key = many_to_one(&g).iter().map(|w| (2.0 * w) as i64).collect();
            *brute.entry(key).or_insert(0) += 1;
        });
        assert_eq!(n as u128, total);
        let mut brute: Vec<_> = brute.into_iter().collect();
        brute.sort();
        assert_eq!(points, brute);
    }

    #[test]
    fn budget_is_enforced() {
        let groups: Vec<Vec<f64>> = (0..3).map(|g| (0..8).map(|i| (3 * i + g) as f64).collect()).collect();
        let s = ranked(&groups);
        let err = exact_null_distribution_with_budget(&s, Statistic::SMax, 100).unwrap_err();
        assert_eq!(err, Error::BudgetExceeded { budget: 100 });
    }

    #[test]
    fn tail_is_inclusive_and_never_zero() {
        let s = ranked(&[vec![5.0, 6.0, 7.0], vec![1.0, 2.0, 9.0], vec![3.0, 4.0, 8.0]]);
        for alt in [Alternative::Greater, Alternative::Less, Alternative::TwoSided] {
            let null = exact_null_distribution(&s, alt.into()).unwrap();
            for v in &null.support {
                let p = null.tail_mass(alt, v[0]);
                assert!(p >= 1);
            }
        }
    }

    #[test]
    fn monte_carlo_close_to_exact() {
        let s = ranked(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let obs = observe(&s, Alternative::Greater);
        let p = simulate_p_value(&s, &obs, &MonteCarlo::new(100_000, 11)).unwrap();
        let se = (1.0 / 6.0 * 5.0 / 6.0 / 1e5f64).sqrt();
        assert!((p.estimate - 1.0 / 6.0).abs() < 3.0 * se, "{}", p.estimate);
        assert_eq!(p.nsim, Some(100_000));
        assert_eq!(p.seed, Some(11));
        assert!((p.std_error.unwrap() - (p.estimate * (1.0 - p.estimate) / 1e5).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_is_thread_independent() {
        let s = ranked(&[STEEL_IQ[0].to_vec(), STEEL_IQ[1].to_vec(), STEEL_IQ[2].to_vec(), STEEL_IQ[3].to_vec()]);
        let obs = observe(&s, Alternative::Less);
        let base = MonteCarlo::new(20_000, 42);
        let one = simulate_p_value(&s, &obs, &base.with_threads(Some(1))).unwrap();
        let four = simulate_p_value(&s, &obs, &base.with_threads(Some(4))).unwrap();
        let ambient = simulate_p_value(&s, &obs, &base).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, ambient);
    }

    #[test]
    fn plus_one_convention() {
        let s = ranked(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let obs = observe(&s, Alternative::Greater);
        let mut mc = MonteCarlo::new(999, 5);
        let plain = simulate_p_value(&s, &obs, &mc).unwrap();
        mc.plus_one = true;
        let shifted = simulate_p_value(&s, &obs, &mc).unwrap();
        let hits = (plain.estimate * 999.0).round();
        assert!((shifted.estimate - (hits + 1.0) / 1000.0).abs() < 1e-15);
    }

    #[test]
    fn nsim_zero_rejected() {
        let s = ranked(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let obs = observe(&s, Alternative::Greater);
        assert!(simulate_p_value(&s, &obs, &MonteCarlo::new(0, 1)).is_err());
        assert!(simulated_tail_curve(&s, Alternative::Greater, &[0.0], &MonteCarlo::new(0, 1)).is_err());
    }

    #[test]
    fn tail_curve_consistency() {
        let s = ranked(&[STEEL_IQ[0].to_vec(), STEEL_IQ[1].to_vec(), STEEL_IQ[2].to_vec()]);
        let mc = MonteCarlo::new(10_000, 9);
        let below = simulated_tail_curve(&s, Alternative::Greater, &[-100.0, -50.0], &mc).unwrap();
        assert_eq!(below, vec![1.0, 1.0]);

        let obs = observe(&s, Alternative::Greater);
        let curve = simulated_tail_curve(&s, Alternative::Greater, &[obs.s_max], &mc).unwrap();
        assert_eq!(curve[0], simulate_p_value(&s, &obs, &mc).unwrap().estimate);

        let obs = observe(&s, Alternative::Less);
        let curve = simulated_tail_curve(&s, Alternative::Less, &[obs.s_min], &mc).unwrap();
        assert_eq!(curve[0], simulate_p_value(&s, &obs, &mc).unwrap().estimate);

        let grid: Vec<f64> = (-30..=30).map(|i| i as f64 / 10.0).collect();
        let curve = simulated_tail_curve(&s, Alternative::Greater, &grid, &mc).unwrap();
        assert!(curve.windows(2).all(|w| w[0] >= w[1]));
        assert!(simulated_tail_curve(&s, Alternative::Greater, &[1.0, 0.0], &mc).is_err());
    }

    #[test]
    fn multinomial_counts() {
        assert_eq!(multinomial(6, &[2, 2, 2]), Some(90));
        assert_eq!(multinomial(12, &[6, 6]), Some(924));
        assert_eq!(multinomial(300, &[100, 100, 100]), None);
    }
}
