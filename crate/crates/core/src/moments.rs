//! Conditional moments of the Mann–Whitney statistics given the tie pattern.
//!
//! For a control sample of size `n0` and treatments of sizes `n1..nK`, all
//! drawn without replacement from the pooled midranks, the statistics
//! `W*_i = W*(X0, Xi)` have mean `n0·ni/2` and the covariance structure of
//! `ni·V0 + Vi` for independent `V0..VK`. The tie sums of [`TiePattern`] are
//! exact integers; they are converted to floating point only at the end.

use serde::{Deserialize, Serialize};

use crate::ranks::TiePattern;
use crate::{Error, Result};

/// Values below zero by less than this (relative) are rounding noise.
const CLAMP_TOLERANCE: f64 = 1e-9;

fn check_size(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        Err(Error::param(format!("{what} must be at least 1")))
    } else {
        Ok(())
    }
}

fn check_fits(used: usize, tie: &TiePattern) -> Result<()> {
    if used as u64 > tie.total() {
        Err(Error::param(format!("group sizes sum to {used} but the tie pattern has only N = {}", tie.total())))
    } else {
        Ok(())
    }
}

/// N(N−1)(N−2) as a float.
fn falling3(n: f64) -> f64 {
    n * (n - 1.0) * (n - 2.0)
}

/// Clamps tiny negative rounding residue to zero.
fn clamp_nonnegative(value: f64, scale: f64, what: &str) -> Result<(f64, Option<String>)> {
    if value.abs() <= 1e-12 * scale {
        Ok((0.0, None))
    } else if value >= 0.0 {
        Ok((value, None))
    } else if value >= -CLAMP_TOLERANCE * scale.max(1.0) {
        let note = (value < -1e-12 * scale.max(1.0)).then(|| format!("{what} = {value:e} clamped to 0"));
        Ok((0.0, note))
    } else {
        Err(Error::Numeric(format!("{what} is negative ({value})")))
    }
}

pub fn mean_w(n0: usize, ni: usize) -> Result<f64> {
    check_size(n0, "control size")?;
    check_size(ni, "treatment size")?;
    Ok(n0 as f64 * ni as f64 / 2.0)
}

/// Variance of `W*(X, Y)` for `|X| = n0`, `|Y| = n1` drawn from the pooled
/// sample described by `tie`. When `n0 + n1 = N` this is the usual
/// tie-corrected two-sample variance.
pub fn var_w(n0: usize, n1: usize, tie: &TiePattern) -> Result<f64> {
    check_size(n0, "control size")?;
    check_size(n1, "treatment size")?;
    check_fits(n0 + n1, tie)?;
    let (a, b) = (n0 as f64, n1 as f64);
    let n = tie.total() as f64;
    let m = a + b;
    let lead = a * b * (m + 1.0) / 12.0;
    // Zero coefficients also guard the N(N−1)(N−2) = 0 cases.
    let cubic = if ((n0 + n1) as u64) == tie.total() && tie.s3_plus() > 0 {
        // (m − 2)/(N − 2) cancels when the two samples exhaust the pool.
        a * b * tie.s3_plus() as f64 / (12.0 * n * (n - 1.0))
    } else if n0 + n1 > 2 && tie.s3_plus() > 0 {
        a * b * (m - 2.0) * tie.s3_plus() as f64 / (12.0 * falling3(n))
    } else {
        0.0
    };
    let quadratic = if ((n0 + n1) as u64) < tie.total() && tie.s2() > 0 {
        a * b * (n - m) * tie.s2() as f64 / (4.0 * falling3(n))
    } else {
        0.0
    };
    Ok(clamp_nonnegative(lead - cubic - quadratic, lead, "var(W*)")?.0)
}

/// Covariance of `W*(X, Y)` and `W*(X, Z)` for disjoint `Y`, `Z` sharing the
/// sample `X` of size `n0`. The expression is symmetric in all three sizes.
pub fn cov_w(n0: usize, n1: usize, n2: usize, tie: &TiePattern) -> Result<f64> {
    check_size(n0, "control size")?;
    check_size(n1, "first treatment size")?;
    check_size(n2, "second treatment size")?;
    check_fits(n0 + n1 + n2, tie)?;
    let prod = n0 as f64 * n1 as f64 * n2 as f64;
    Ok(prod / 12.0 * (1.0 - cubic_tie_fraction(tie)))
}

/// S₃ / (N(N−1)(N−2)), the share of ordered triples lying in one tie block.
fn cubic_tie_fraction(tie: &TiePattern) -> f64 {
    let s3 = tie.s3();
    // A single block is the fully tied limit, including N = 2 where 0/0.
    if tie.distinct() == 1 {
        1.0
    } else if s3 == 0 {
        0.0
    } else {
        s3 as f64 / falling3(tie.total() as f64)
    }
}

/// Means, covariances and the one-factor decomposition for a control (index 0
/// of `sizes`) and K treatments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub sizes: Vec<usize>,
    pub mu: Vec<f64>,
    pub tau2: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub sigma0_2: f64,
    pub sigma2: Vec<f64>,
    /// Per treatment, the fraction of the untied variance removed by ties.
    pub tie_correction_ratio: Vec<f64>,
    pub warnings: Vec<String>,
}

impl MomentSet {
    pub fn treatments(&self) -> usize {
        self.mu.len()
    }

    pub fn tau(&self) -> Vec<f64> {
        self.tau2.iter().map(|v| v.sqrt()).collect()
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0_2.sqrt()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.sigma2.iter().map(|v| v.sqrt()).collect()
    }

    pub fn control_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn treatment_sizes(&self) -> &[usize] {
        &self.sizes[1..]
    }

    /// `(W − μᵢ)/τᵢ`, or 0 when the coordinate is degenerate.
    pub fn standardize(&self, i: usize, w: f64) -> f64 {
        let tau2 = self.tau2[i];
        if tau2 > 0.0 {
            (w - self.mu[i]) / tau2.sqrt()
        } else {
            0.0
        }
    }
}

/// Moments for `sizes = [n0, n1, …, nK]` given the pooled tie pattern.
pub fn factor_decomposition(sizes: &[usize], tie: &TiePattern) -> Result<MomentSet> {
    if sizes.len() < 2 {
        return Err(Error::param("need a control and at least one treatment"));
    }
    for &n in sizes {
        check_size(n, "group size")?;
    }
    let total: usize = sizes.iter().sum();
    if total as u64 != tie.total() {
        return Err(Error::param(format!("group sizes sum to {total} but the tie pattern has N = {}", tie.total())));
    }

    let n0 = sizes[0];
    let treat = &sizes[1..];
    let a = n0 as f64;
    let n = tie.total() as f64;
    let cubic = cubic_tie_fraction(tie);
    let quadratic = if tie.s2() == 0 { 0.0 } else { tie.s2() as f64 / (n * (n - 1.0)) };

    let mut warnings = Vec::new();
    let (sigma0_2, note) = clamp_nonnegative(a / 12.0 * (1.0 - cubic), a / 12.0, "sigma0^2")?;
    warnings.extend(note);

    let untied = TiePattern::untied(tie.total())?;
    let mut mu = Vec::with_capacity(treat.len());
    let mut tau2 = Vec::with_capacity(treat.len());
    let mut sigma2 = Vec::with_capacity(treat.len());
    let mut ratio = Vec::with_capacity(treat.len());
    for (i, &ni) in treat.iter().enumerate() {
        let b = ni as f64;
        mu.push(mean_w(n0, ni)?);
        let t2 = var_w(n0, ni, tie)?;
        tau2.push(t2);

        let lead = a * b / 12.0;
        let raw = lead * (a + 1.0 - 3.0 * quadratic - (a - 2.0) * cubic);
        let (s2, note) = clamp_nonnegative(raw, lead * (a + 1.0), &format!("sigma_{}^2", i + 1))?;
        warnings.extend(note);
        sigma2.push(s2);

        let recomposed = b * b * sigma0_2 + s2;
        if (recomposed - t2).abs() > 1e-10 * t2.max(lead) {
            return Err(Error::Numeric(format!(
                "factor decomposition of treatment {} does not recompose: {recomposed} vs {t2}",
                i + 1
            )));
        }

        let free = var_w(n0, ni, &untied)?;
        ratio.push((free - t2) / free);
    }

    let k = treat.len();
    let mut cov = vec![vec![0.0; k]; k];
    for i in 0..k {
        cov[i][i] = tau2[i];
        for j in i + 1..k {
            let c = cov_w(n0, treat[i], treat[j], tie)?;
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }

    Ok(MomentSet { sizes: sizes.to_vec(), mu, tau2, cov, sigma0_2, sigma2, tie_correction_ratio: ratio, warnings })
}

/// Moments for continuous data (no ties) with the given group sizes.
pub fn untied_moments(sizes: &[usize]) -> Result<MomentSet> {
    let total: usize = sizes.iter().sum();
    factor_decomposition(sizes, &TiePattern::untied(total as u64)?)
}
