//! Approximation-quality harness: simulated tail probabilities against the
//! normal approximation with and without the tie adjustment.
//!
//! The unadjusted column keeps the observed statistic standardized with the
//! tie-corrected moments but evaluates its tail under the no-ties model:
//! thresholds `t·τ_adj` on the centered scale, probabilities from the
//! no-ties factor model. Without ties the two columns coincide exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use steelrank::gauss::tail_prob_centered;
use steelrank::moments::{factor_decomposition, untied_moments};
use steelrank::randomization::simulated_tail_curve;
use steelrank::ranks::check_asymptotic_conditions;
use steelrank::{Alternative, FactorModel, RankedSamples};

use crate::config::RunConfig;
use crate::input::GroupedData;
use crate::report::{GroupInfo, Report};
use crate::CliError;

/// Asymptotic tail levels the default threshold grid is placed at.
pub const DEFAULT_LEVELS: [f64; 16] =
    [0.5, 0.4, 0.3, 0.25, 0.2, 0.15, 0.1, 0.075, 0.05, 0.04, 0.03, 0.02, 0.01, 0.005, 0.002, 0.001];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Standard normal values.
    Continuous,
    /// Standard normal values rounded to one decimal.
    Rounded,
    /// Fair coin flips coded 0 and 1.
    #[value(name = "two_valued", alias = "two-valued")]
    TwoValued,
    /// round(2Z) clamped to [−4, 4] for standard normal Z.
    #[value(name = "nine_valued", alias = "nine-valued")]
    NineValued,
}

/// Draws one data set of the given group sizes.
pub fn generate(scenario: Scenario, sizes: &[usize], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sizes
        .iter()
        .map(|&n| {
            (0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    match scenario {
                        Scenario::Continuous => z,
                        Scenario::Rounded => (z * 10.0).round() / 10.0,
                        Scenario::TwoValued => f64::from(u8::from(z > 0.0)),
                        Scenario::NineValued => (2.0 * z).round().clamp(-4.0, 4.0),
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessRow {
    pub threshold: f64,
    pub p_sim: f64,
    pub p_asym_adj: f64,
    pub p_asym_unadj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessSummary {
    /// Largest |p_sim − p_asym_adj| over rows with p_asym_adj in [0.01, 0.2].
    pub max_abs_diff_adj: Option<f64>,
    pub max_abs_diff_unadj: Option<f64>,
    /// The row whose adjusted tail is closest to 0.05.
    pub near_005: Option<HarnessRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessTable {
    pub sizes: Vec<usize>,
    pub alternative: Alternative,
    pub distinct_values: usize,
    pub max_tie_fraction: f64,
    pub rows: Vec<HarnessRow>,
    pub summary: HarnessSummary,
}

impl HarnessTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["threshold", "p_sim", "p_asym_adj", "p_asym_unadj"]).expect("in-memory write");
        for r in &self.rows {
            w.serialize((r.threshold, r.p_sim, r.p_asym_adj, r.p_asym_unadj)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    fn summarize(rows: &[HarnessRow]) -> HarnessSummary {
        let band: Vec<&HarnessRow> = rows.iter().filter(|r| (0.01..=0.2).contains(&r.p_asym_adj)).collect();
        let max_of = |f: &dyn Fn(&HarnessRow) -> f64| band.iter().map(|r| f(r)).reduce(f64::max);
        HarnessSummary {
            max_abs_diff_adj: max_of(&|r| (r.p_sim - r.p_asym_adj).abs()),
            max_abs_diff_unadj: max_of(&|r| (r.p_sim - r.p_asym_unadj).abs()),
            near_005: rows
                .iter()
                .min_by(|a, b| (a.p_asym_adj - 0.05).abs().total_cmp(&(b.p_asym_adj - 0.05).abs()))
                .copied(),
        }
    }
}

fn centered(model_tau: &[f64], t: f64) -> Vec<f64> {
    model_tau.iter().map(|s| t * s).collect()
}

/// Threshold `t` with adjusted asymptotic tail `level`, by bisection.
fn threshold_for(model: &FactorModel, alt: Alternative, level: f64) -> Result<f64, CliError> {
    let tail = |t: f64| tail_prob_centered(model, alt, &centered(model.tau(), t));
    // The tail is decreasing in t except for the lower alternative.
    let increasing = alt == Alternative::Less;
    let (mut lo, mut hi) = if alt == Alternative::TwoSided { (0.0, 40.0) } else { (-40.0, 40.0) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let above = tail(mid)? > level;
        if above != increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn run(
    config: &RunConfig,
    data: Option<GroupedData>,
    threads: Option<usize>,
    report: &mut Report,
) -> Result<(), CliError> {
    let (labels, groups) = match data {
        Some(d) => (d.labels, d.values),
        None => {
            let h = &config.harness;
            let scenario = h.scenario.expect("validated");
            let groups = generate(scenario, &h.sizes, h.data_seed);
            let labels =
                (0..groups.len()).map(|g| if g == 0 { "control".into() } else { format!("treatment{g}") }).collect();
            (labels, groups)
        }
    };
    report.groups =
        Some(labels.iter().zip(&groups).map(|(label, g)| GroupInfo { label: label.clone(), size: g.len() }).collect());
    let samples = RankedSamples::new(&groups)?;
    let diagnostics = check_asymptotic_conditions(&samples, config.epsilon)?;
    report.warnings.extend(diagnostics.warnings.iter().cloned());

    let sizes = samples.sizes().to_vec();
    let moments = factor_decomposition(&sizes, samples.tie_pattern())?;
    if moments.tau2.contains(&0.0) {
        return Err(CliError::Config("a treatment has zero null variance; the harness needs untied mass".into()));
    }
    let adjusted = FactorModel::from_moments(&moments)?.with_nodes(config.nodes)?;
    let untied = FactorModel::from_moments(&untied_moments(&sizes)?)?.with_nodes(config.nodes)?;
    let alt = config.alternative;

    let mut thresholds = match &config.harness.thresholds {
        Some(t) => t.clone(),
        None => DEFAULT_LEVELS.iter().map(|&p| threshold_for(&adjusted, alt, p)).collect::<Result<Vec<_>, _>>()?,
    };
    if alt == Alternative::TwoSided && thresholds.iter().any(|&t| t < 0.0) {
        return Err(CliError::Config("two-sided thresholds must be nonnegative".into()));
    }
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let mut mc = steelrank::randomization::MonteCarlo::new(config.nsim, config.seed).with_threads(threads);
    mc.plus_one = config.plus_one;
    let sim = simulated_tail_curve(&samples, alt, &thresholds, &mc)?;
    let rows = thresholds
        .iter()
        .zip(sim)
        .map(|(&t, p_sim)| {
            let d = centered(adjusted.tau(), t);
            Ok(HarnessRow {
                threshold: t,
                p_sim,
                p_asym_adj: tail_prob_centered(&adjusted, alt, &d)?,
                p_asym_unadj: tail_prob_centered(&untied, alt, &d)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    report.harness = Some(HarnessTable {
        sizes,
        alternative: alt,
        distinct_values: samples.tie_pattern().distinct(),
        max_tie_fraction: diagnostics.max_tie_fraction,
        summary: HarnessTable::summarize(&rows),
        rows,
    });
    report.diagnostics = Some(diagnostics);
    report.dedup_warnings();
    Ok(())
}
