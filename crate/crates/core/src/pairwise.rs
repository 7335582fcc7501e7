//! All-pairs comparisons among K samples (Steel–Dwass type).
//!
//! Pairs are ordered lexicographically `(a, b)`, `a < b`, and the statistic
//! for a pair is `W*(X_a, X_b)`. Covariances between pairs come from the
//! many-to-one formulas: a shared sample acts as the control, reversing a
//! pair flips the sign (`W*(X_b, X_a) = n_a·n_b − W*(X_a, X_b)`), and pairs
//! without a common sample are uncorrelated given the tie pattern.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::moments::{cov_w, mean_w, var_w};
use crate::randomization::{map_chunks, MonteCarlo, PValue, SplitSampler};
use crate::ranks::{RankedSamples, TiePattern};
use crate::statistics::{mann_whitney_star, Alternative};
use crate::{Error, Result};

/// Eigenvalues above `-PSD_TOLERANCE · max(1, |λ|max)` count as nonnegative.
const PSD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMoments {
    pub sizes: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
    pub mu: Vec<f64>,
    pub tau2: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl PairwiseMoments {
    pub fn standardize(&self, p: usize, w: f64) -> f64 {
        if self.tau2[p] > 0.0 {
            (w - self.mu[p]) / self.tau2[p].sqrt()
        } else {
            0.0
        }
    }

    /// Smallest eigenvalue of the covariance matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn matrix(&self) -> DMatrix<f64> {
        let p = self.pairs.len();
        DMatrix::from_fn(p, p, |i, j| self.cov[i][j])
    }

    fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        SymmetricEigen::new(self.matrix())
    }

    /// Square-root factor `L` with `L·Lᵀ = cov`, negative eigenvalues clipped.
    fn factor(&self) -> Result<DMatrix<f64>> {
        let eig = self.eigen();
        let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOLERANCE * scale {
            return Err(Error::Numeric(format!(
                "pairwise covariance is not positive semidefinite (smallest eigenvalue {min:e})"
            )));
        }
        let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
    }
}

pub fn pairs(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect()
}

/// Express pair `(a, b)` relative to the shared sample `s`: the sign and the
/// other index, with `W*(X_a, X_b) = const + sign · W*(X_s, X_other)`.
fn orient(pair: (usize, usize), s: usize) -> (f64, usize) {
    if pair.0 == s {
        (1.0, pair.1)
    } else {
        (-1.0, pair.0)
    }
}

/// Means, variances and covariances of all `C(K, 2)` pair statistics.
pub fn pairwise_moment_matrix(sizes: &[usize], tie: &TiePattern) -> Result<PairwiseMoments> {
    if sizes.len() < 2 {
        return Err(Error::param("all-pairs comparisons need at least two samples"));
    }
    let total: usize = sizes.iter().sum();
    if total as u64 != tie.total() {
        return Err(Error::param(format!("group sizes sum to {total} but the tie pattern has N = {}", tie.total())));
    }
    let pairs = pairs(sizes.len());
    let mu = pairs.iter().map(|&(a, b)| mean_w(sizes[a], sizes[b])).collect::<Result<Vec<_>>>()?;
    let tau2 = pairs.iter().map(|&(a, b)| var_w(sizes[a], sizes[b], tie)).collect::<Result<Vec<_>>>()?;
    let p = pairs.len();
    let mut cov = vec![vec![0.0; p]; p];
    for x in 0..p {
        cov[x][x] = tau2[x];
        for y in x + 1..p {
            let (u, v) = (pairs[x], pairs[y]);
            let shared = [u.0, u.1].into_iter().find(|s| *s == v.0 || *s == v.1);
            let c = match shared {
                None => 0.0,
                Some(s) => {
                    let (su, ou) = orient(u, s);
                    let (sv, ov) = orient(v, s);
                    su * sv * cov_w(sizes[s], sizes[ou], sizes[ov], tie)?
                }
            };
            cov[x][y] = c;
            cov[y][x] = c;
        }
    }
    Ok(PairwiseMoments { sizes: sizes.to_vec(), pairs, mu, tau2, cov })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseMethod {
    /// Re-splitting the pooled sample: the exact conditional model.
    MonteCarlo,
    /// Sampling the C(K,2)-dimensional normal approximation.
    MvnSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub pairs: Vec<(usize, usize)>,
    pub w_star: Vec<f64>,
    pub standardized: Vec<f64>,
    pub alternative: Alternative,
    pub statistic: f64,
    pub method: PairwiseMethod,
    pub p_value: PValue,
}

/// Observed pair statistics for samples in `samples` (no control role).
pub fn observe_pairs(samples: &RankedSamples, moments: &PairwiseMoments) -> Result<(Vec<f64>, Vec<f64>)> {
    let groups: Vec<Vec<f64>> = (0..samples.group_count()).map(|g| samples.group_midranks(g)).collect();
    let w =
        moments.pairs.iter().map(|&(a, b)| mann_whitney_star(&groups[a], &groups[b])).collect::<Result<Vec<_>>>()?;
    let z = w.iter().enumerate().map(|(p, &x)| moments.standardize(p, x)).collect();
    Ok((w, z))
}

pub fn pairwise_test(
    samples: &RankedSamples,
    alternative: Alternative,
    method: PairwiseMethod,
    mc: &MonteCarlo,
) -> Result<PairwiseResult> {
    let moments = pairwise_moment_matrix(samples.sizes(), samples.tie_pattern())?;
    let (w_star, standardized) = observe_pairs(samples, &moments)?;
    let observed = alternative.reduce(&standardized);
    let np = moments.pairs.len();

    let counts: Vec<u64> = match method {
        PairwiseMethod::MonteCarlo => {
            let base = SplitSampler::new(samples);
            map_chunks(mc, |_, reps, rng| {
                let mut sampler = base.clone();
                let mut z = vec![0.0; np];
                let mut hits = 0u64;
                for _ in 0..reps {
                    sampler.draw(rng);
                    for (p, &(a, b)) in moments.pairs.iter().enumerate() {
                        z[p] = moments.standardize(p, sampler.doubled_w(a, b) as f64 / 2.0);
                    }
                    hits += alternative.in_tail(alternative.reduce(&z), observed) as u64;
                }
                hits
            })?
        }
        PairwiseMethod::MvnSample => {
            let factor = moments.factor()?;
            let tau: Vec<f64> = moments.tau2.iter().map(|v| v.sqrt()).collect();
            map_chunks(mc, |_, reps, rng| {
                let mut hits = 0u64;
                let mut z = vec![0.0; np];
                for _ in 0..reps {
                    let e = DVector::from_fn(np, |_, _| StandardNormal.sample(rng));
                    let x = &factor * e;
                    for p in 0..np {
                        z[p] = if tau[p] > 0.0 { x[p] / tau[p] } else { 0.0 };
                    }
                    hits += alternative.in_tail(alternative.reduce(&z), observed) as u64;
                }
                hits
            })?
        }
    };
    let hits: u64 = counts.iter().sum();
    let mut p_value = mc.p_value(hits);
    if method == PairwiseMethod::MvnSample {
        p_value.method = crate::randomization::Method::Asymptotic;
    }
    Ok(PairwiseResult { pairs: moments.pairs, w_star, standardized, alternative, statistic: observed, method, p_value })
}
