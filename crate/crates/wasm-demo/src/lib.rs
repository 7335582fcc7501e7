//! wasm-bindgen bindings behind `www/index.html`.
//!
//! Data arrive as text, one group per line: a label followed by its values,
//! separated by spaces or commas. The first line is the control. Results go
//! back as JSON strings.

use serde::Serialize;
use steelrank::confidence::{simultaneous_bounds, Direction};
use steelrank::gauss::tail_prob;
use steelrank::moments::factor_decomposition;
use steelrank::randomization::{exact_p_value_with_budget, simulate_p_value, simulated_tail_curve, MonteCarlo};
use steelrank::statistics::steel_statistics;
use steelrank::{Alternative, FactorModel, RankedSamples};
use wasm_bindgen::prelude::*;

// Small enough to keep the page responsive.
const EXACT_BUDGET: u64 = 200_000;

pub struct Groups {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn parse_groups(text: &str) -> Result<Groups, String> {
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(|c: char| c.is_whitespace() || c == ',').filter(|f| !f.is_empty());
        let label = fields.next().unwrap_or_default().to_string();
        let row = fields
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| !v.is_nan())
                    .ok_or_else(|| format!("line {}: '{f}' is not a number", i + 1))
            })
            .collect::<Result<Vec<_>, _>>()?;
        labels.push(label);
        values.push(row);
    }
    if values.len() < 2 {
        return Err("enter a control line and at least one treatment line".into());
    }
    Ok(Groups { labels, values })
}

fn alternative(name: &str) -> Result<Alternative, String> {
    name.parse().map_err(|e: steelrank::Error| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

#[derive(Serialize)]
struct SteelSummary {
    labels: Vec<String>,
    w_star: Vec<f64>,
    standardized: Vec<f64>,
    statistic: f64,
    p_asymptotic: f64,
    p_exact: Option<f64>,
    p_simulated: f64,
    std_error: f64,
}

pub fn steel_test_json(text: &str, alt: &str, nsim: u32, seed: u32) -> Result<String, String> {
    let groups = parse_groups(text)?;
    let alt = alternative(alt)?;
    let samples = RankedSamples::new(&groups.values).map_err(|e| e.to_string())?;
    let moments = factor_decomposition(samples.sizes(), samples.tie_pattern()).map_err(|e| e.to_string())?;
    let obs = steel_statistics(&samples, &moments, alt).map_err(|e| e.to_string())?;
    let model = FactorModel::from_moments(&moments).map_err(|e| e.to_string())?;
    let p_asymptotic = tail_prob(&model, alt, obs.statistic()).map_err(|e| e.to_string())?;
    let p_exact = exact_p_value_with_budget(&samples, &obs, EXACT_BUDGET).ok().map(|p| p.estimate);
    let sim =
        simulate_p_value(&samples, &obs, &MonteCarlo::new(nsim.into(), seed.into())).map_err(|e| e.to_string())?;
    Ok(to_json(&SteelSummary {
        labels: groups.labels,
        statistic: obs.statistic(),
        w_star: obs.w_star,
        standardized: obs.standardized,
        p_asymptotic,
        p_exact,
        p_simulated: sim.estimate,
        std_error: sim.std_error.unwrap_or(0.0),
    }))
}

#[derive(Serialize)]
struct TailCurve {
    thresholds: Vec<f64>,
    simulated: Vec<f64>,
    asymptotic: Vec<f64>,
}

pub fn tail_curve_json(text: &str, alt: &str, nsim: u32, seed: u32, points: u32) -> Result<String, String> {
    let groups = parse_groups(text)?;
    let alt = alternative(alt)?;
    let samples = RankedSamples::new(&groups.values).map_err(|e| e.to_string())?;
    let moments = factor_decomposition(samples.sizes(), samples.tie_pattern()).map_err(|e| e.to_string())?;
    let model = FactorModel::from_moments(&moments).map_err(|e| e.to_string())?;
    let points = points.clamp(2, 400);
    let (lo, hi) = match alt {
        Alternative::Greater => (-1.0, 4.0),
        Alternative::Less => (-4.0, 1.0),
        Alternative::TwoSided => (0.0, 4.0),
    };
    let thresholds: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let simulated = simulated_tail_curve(&samples, alt, &thresholds, &MonteCarlo::new(nsim.into(), seed.into()))
        .map_err(|e| e.to_string())?;
    let asymptotic = thresholds
        .iter()
        .map(|&t| tail_prob(&model, alt, t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(to_json(&TailCurve { thresholds, simulated, asymptotic }))
}

pub fn bounds_json(text: &str, gamma: f64, direction: &str, eps: f64) -> Result<String, String> {
    let groups = parse_groups(text)?;
    let direction = match direction {
        "upper" => Direction::Upper,
        "lower" => Direction::Lower,
        "interval" => Direction::Interval,
        other => return Err(format!("unknown direction '{other}'")),
    };
    let result = simultaneous_bounds(&groups.values, gamma, direction, eps).map_err(|e| e.to_string())?;
    Ok(to_json(&result))
}

/// Steel test with asymptotic, exact (when small) and simulated p-values.
#[wasm_bindgen]
pub fn steel_test(text: &str, alternative: &str, nsim: u32, seed: u32) -> Result<String, JsValue> {
    steel_test_json(text, alternative, nsim, seed).map_err(|e| JsValue::from_str(&e))
}

/// Simulated and asymptotic tail probabilities over a threshold grid.
#[wasm_bindgen]
pub fn tail_curve(text: &str, alternative: &str, nsim: u32, seed: u32, points: u32) -> Result<String, JsValue> {
    tail_curve_json(text, alternative, nsim, seed, points).map_err(|e| JsValue::from_str(&e))
}

/// Simultaneous shift bounds against the control.
#[wasm_bindgen]
pub fn confidence_bounds(text: &str, gamma: f64, direction: &str, rounding_eps: f64) -> Result<String, JsValue> {
    bounds_json(text, gamma, direction, rounding_eps).map_err(|e| JsValue::from_str(&e))
}
