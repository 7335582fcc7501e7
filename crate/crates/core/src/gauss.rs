//! Normal approximation through the one-factor representation.
//!
//! The covariance of `W*_1..W*_K` equals that of `ni·V0 + Vi` with independent
//! `V0 ~ N(0, σ0²)` and `Vi ~ N(0, σi²)`. Conditioning on `V0 = σ0·z` makes the
//! coordinates independent, so every joint box probability is a single
//! integral over `z` of a product of univariate normal probabilities.

use std::sync::{Arc, OnceLock};

use crate::moments::MomentSet;
use crate::statistics::Alternative;
use crate::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal distribution function, saturating beyond |z| = 40.
pub fn std_normal_cdf(z: f64) -> f64 {
    if z > 40.0 {
        1.0
    } else if z < -40.0 {
        0.0
    } else {
        0.5 * libm::erfc(-z / SQRT_2)
    }
}

pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub const DEFAULT_NODES: usize = 160;
const PANEL_ORDER: usize = 20;
const Z_LIMIT: f64 = 8.5;

/// Gauss–Legendre nodes and weights on [−1, 1].
fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; order];
    let mut w = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut root = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(root) and P_{n−1}(root).
            let (mut p0, mut p1) = (1.0, root);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * root * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if order == 0 { 1.0 } else { p1 };
            let pm = if order == 1 { 1.0 } else { p0 };
            deriv = n * (root * pn - pm) / (root * root - 1.0);
            let step = pn / deriv;
            root -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -root;
        x[order - 1 - i] = root;
        let wi = 2.0 / ((1.0 - root * root) * deriv * deriv);
        w[i] = wi;
        w[order - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on [−8.5, 8.5] with the standard normal
/// density folded into the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panel_width: f64,
    base: (Vec<f64>, Vec<f64>),
}

impl Quadrature {
    /// At least `nodes` nodes, in panels of 20.
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::param("quadrature needs at least one node"));
        }
        let panels = nodes.div_ceil(PANEL_ORDER);
        let (x, w) = gauss_legendre(PANEL_ORDER);
        let width = 2.0 * Z_LIMIT / panels as f64;
        let mut out_nodes = Vec::with_capacity(panels * PANEL_ORDER);
        let mut out_weights = Vec::with_capacity(panels * PANEL_ORDER);
        for p in 0..panels {
            let mid = -Z_LIMIT + (p as f64 + 0.5) * width;
            for (xi, wi) in x.iter().zip(&w) {
                let z = mid + 0.5 * width * xi;
                out_nodes.push(z);
                out_weights.push(0.5 * width * wi * std_normal_pdf(z));
            }
        }
        Ok(Quadrature { nodes: out_nodes, weights: out_weights, panel_width: width, base: (x, w) })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫ f(z) φ(z) dz
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| w * f(z)).sum()
    }

    /// Same integral for an integrand with jumps at `breaks`. Each piece
    /// between jumps gets its own panels so no panel straddles a jump.
    pub fn integrate_piecewise(&self, f: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
        let mut edges: Vec<f64> = breaks.iter().copied().filter(|b| b.is_finite() && b.abs() < Z_LIMIT).collect();
        if edges.is_empty() {
            return self.integrate(f);
        }
        edges.push(-Z_LIMIT);
        edges.push(Z_LIMIT);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let (x, w) = &self.base;
        let mut total = 0.0;
        for seg in edges.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let panels = ((b - a) / self.panel_width).ceil().max(1.0) as usize;
            let width = (b - a) / panels as f64;
            for p in 0..panels {
                let mid = a + (p as f64 + 0.5) * width;
                for (xi, wi) in x.iter().zip(w) {
                    let z = mid + 0.5 * width * xi;
                    total += 0.5 * width * wi * std_normal_pdf(z) * f(z);
                }
            }
        }
        total
    }
}

fn default_quadrature() -> Arc<Quadrature> {
    static DEFAULT: OnceLock<Arc<Quadrature>> = OnceLock::new();
    DEFAULT.get_or_init(|| Arc::new(Quadrature::new(DEFAULT_NODES).expect("default quadrature"))).clone()
}

/// Parameters of the one-factor normal model for K treatments.
#[derive(Debug, Clone)]
pub struct FactorModel {
    n0: usize,
    n: Vec<usize>,
    sigma0: f64,
    sigma: Vec<f64>,
    tau: Vec<f64>,
    quad: Arc<Quadrature>,
}

impl FactorModel {
    pub fn new(n0: usize, n: Vec<usize>, sigma0: f64, sigma: Vec<f64>) -> Result<Self> {
        if n.is_empty() {
            return Err(Error::param("factor model needs at least one treatment"));
        }
        if sigma.len() != n.len() {
            return Err(Error::DimensionMismatch { expected: n.len(), got: sigma.len() });
        }
        if sigma0.is_nan() || sigma0 < 0.0 || sigma.iter().any(|s| s.is_nan() || *s < 0.0) {
            return Err(Error::param("factor standard deviations must be nonnegative"));
        }
        let tau = n
            .iter()
            .zip(&sigma)
            .map(|(&ni, &si)| {
                let a = ni as f64 * sigma0;
                (a * a + si * si).sqrt()
            })
            .collect();
        Ok(FactorModel { n0, n, sigma0, sigma, tau, quad: default_quadrature() })
    }

    pub fn from_moments(m: &MomentSet) -> Result<Self> {
        let model = Self::new(m.control_size(), m.treatment_sizes().to_vec(), m.sigma0(), m.sigma())?;
        for (i, (&t, &t2)) in model.tau.iter().zip(&m.tau2).enumerate() {
            if (t * t - t2).abs() > 1e-10 * t2.max(1.0) {
                return Err(Error::Numeric(format!("tau_{} inconsistent with factors", i + 1)));
            }
        }
        Ok(model)
    }

    pub fn with_nodes(mut self, nodes: usize) -> Result<Self> {
        self.quad = if nodes == DEFAULT_NODES { default_quadrature() } else { Arc::new(Quadrature::new(nodes)?) };
        Ok(self)
    }

    pub fn treatments(&self) -> usize {
        self.n.len()
    }

    pub fn control_size(&self) -> usize {
        self.n0
    }

    pub fn sizes(&self) -> &[usize] {
        &self.n
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn mu(&self, i: usize) -> f64 {
        self.n0 as f64 * self.n[i] as f64 / 2.0
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.quad.len()
    }

    /// P(ni·σ0·z + Vi ≤ d), or `< d` when `strict`, given the factor value z.
    fn conditional(&self, i: usize, d: f64, z: f64, strict: bool) -> f64 {
        let shift = self.n[i] as f64 * self.sigma0 * z;
        let s = self.sigma[i];
        if s > 0.0 {
            std_normal_cdf((d - shift) / s)
        } else if (strict && shift < d) || (!strict && shift <= d) {
            1.0
        } else {
            0.0
        }
    }

    /// Values of z where some degenerate conditional probability jumps,
    /// given the thresholds `d` (and their negatives when `both`).
    fn jumps(&self, d: &[f64], both: bool) -> Vec<f64> {
        if self.sigma0 == 0.0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (i, &s) in self.sigma.iter().enumerate() {
            if s == 0.0 {
                let scale = self.n[i] as f64 * self.sigma0;
                out.push(d[i] / scale);
                if both {
                    out.push(-d[i] / scale);
                }
            }
        }
        out
    }

    fn integrate_product(&self, breaks: &[f64], factor: impl Fn(usize, f64) -> f64) -> f64 {
        let k = self.n.len();
        self.quad.integrate_piecewise(|z| (0..k).map(|i| factor(i, z)).product(), breaks)
    }
}

/// Tail probability of the Steel statistic for thresholds `d` on the
/// centered (`W − μ`) scale, one per treatment.
pub fn tail_prob_centered(model: &FactorModel, alternative: Alternative, d: &[f64]) -> Result<f64> {
    if d.len() != model.treatments() {
        return Err(Error::DimensionMismatch { expected: model.treatments(), got: d.len() });
    }
    let breaks = model.jumps(d, alternative == Alternative::TwoSided);
    let inside = match alternative {
        Alternative::Greater => model.integrate_product(&breaks, |i, z| model.conditional(i, d[i], z, true)),
        Alternative::Less => model.integrate_product(&breaks, |i, z| 1.0 - model.conditional(i, d[i], z, false)),
        Alternative::TwoSided => model.integrate_product(&breaks, |i, z| {
            (model.conditional(i, d[i], z, true) - model.conditional(i, -d[i], z, false)).max(0.0)
        }),
    };
    Ok((1.0 - inside).clamp(0.0, 1.0))
}

fn scaled(model: &FactorModel, u: f64) -> Vec<f64> {
    model.tau.iter().map(|t| u * t).collect()
}

/// P(max standardized ≥ u).
pub fn tail_prob_max(model: &FactorModel, u: f64) -> f64 {
    tail_prob_centered(model, Alternative::Greater, &scaled(model, u)).expect("dimensions match")
}

/// P(min standardized ≤ l).
pub fn tail_prob_min(model: &FactorModel, l: f64) -> f64 {
    tail_prob_centered(model, Alternative::Less, &scaled(model, l)).expect("dimensions match")
}

/// P(max |standardized| ≥ u), u ≥ 0.
pub fn tail_prob_abs(model: &FactorModel, u: f64) -> Result<f64> {
    if u.is_nan() || u < 0.0 {
        return Err(Error::param(format!("two-sided threshold must be nonnegative, got {u}")));
    }
    tail_prob_centered(model, Alternative::TwoSided, &scaled(model, u))
}

/// Asymptotic p-value of an observed Steel statistic.
pub fn tail_prob(model: &FactorModel, alternative: Alternative, statistic: f64) -> Result<f64> {
    match alternative {
        Alternative::Greater => Ok(tail_prob_max(model, statistic)),
        Alternative::Less => Ok(tail_prob_min(model, statistic)),
        Alternative::TwoSided => tail_prob_abs(model, statistic),
    }
}

/// P(W_i ≤ c_i for all i) with thresholds on the raw Mann–Whitney scale.
pub fn joint_lower_box_prob(model: &FactorModel, c: &[f64]) -> Result<f64> {
    if c.len() != model.treatments() {
        return Err(Error::DimensionMismatch { expected: model.treatments(), got: c.len() });
    }
    let d: Vec<f64> = c.iter().enumerate().map(|(i, ci)| ci - model.mu(i)).collect();
    let p = model.integrate_product(&model.jumps(&d, false), |i, z| model.conditional(i, d[i], z, false));
    Ok(p.clamp(0.0, 1.0))
}

const SOLVER_ITERATIONS: usize = 200;

/// Common standardized threshold `u` with P(W_i ≤ μ_i + u·τ_i ∀i) = gamma.
pub fn solve_common_threshold(model: &FactorModel, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if model.tau.iter().any(|&t| t <= 0.0) {
        return Err(Error::Numeric("degenerate model: some tau is zero".into()));
    }
    let coverage = |u: f64| 1.0 - tail_prob_max(model, u);
    let (mut lo, mut hi) = (-1.0, 1.0);
    while coverage(lo) > gamma {
        lo *= 2.0;
        if lo < -64.0 {
            return Err(Error::Numeric(format!("cannot bracket gamma = {gamma}")));
        }
    }
    while coverage(hi) < gamma {
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::Numeric(format!("cannot bracket gamma = {gamma}")));
        }
    }
    for _ in 0..SOLVER_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let f = coverage(mid) - gamma;
        if f == 0.0 || (hi - lo) < 1e-15 * mid.abs().max(1.0) {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numeric("threshold search did not converge".into()))
}
