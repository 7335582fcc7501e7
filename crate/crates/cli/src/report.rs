//! The versioned report and its JSON, text and CSV renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};
use steelrank::confidence::ConfidenceResult;
use steelrank::pairwise::PairwiseResult;
use steelrank::randomization::PValue;
use steelrank::{Alternative, Diagnostics, MomentSet, SteelObservation};

use crate::config::RunConfig;
use crate::harness::HarnessTable;

pub const SCHEMA: &str = "steelrank.report/1";

/// Significant digits kept for every floating-point number in JSON.
pub const SIGNIFICANT_DIGITS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupInfo {
    pub label: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
    pub sigma0: f64,
    pub sigma: Vec<f64>,
    pub tie_correction_ratio: Vec<f64>,
}

impl From<&MomentSet> for MomentSummary {
    fn from(m: &MomentSet) -> Self {
        MomentSummary {
            mu: m.mu.clone(),
            tau: m.tau(),
            sigma0: m.sigma0(),
            sigma: m.sigma(),
            tie_correction_ratio: m.tie_correction_ratio.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PValues {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymptotic: Option<PValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<PValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulated: Option<PValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub pairs: Vec<(usize, usize)>,
    pub w_star: Vec<f64>,
    pub standardized: Vec<f64>,
    pub alternative: Alternative,
    pub statistic: f64,
    pub p_values: PValues,
}

impl PairwiseReport {
    pub fn from_result(r: &PairwiseResult) -> Self {
        PairwiseReport {
            pairs: r.pairs.clone(),
            w_star: r.w_star.clone(),
            standardized: r.standardized.clone(),
            alternative: r.alternative,
            statistic: r.statistic,
            p_values: PValues::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<GroupInfo>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observation: Option<SteelObservation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_values: Option<PValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairwise: Option<PairwiseReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<ConfidenceResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harness: Option<HarnessTable>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        Report {
            schema: SCHEMA.to_string(),
            config,
            groups: None,
            diagnostics: None,
            moments: None,
            observation: None,
            p_values: None,
            pairwise: None,
            confidence: None,
            harness: None,
            warnings: Vec::new(),
        }
    }

    pub(crate) fn dedup_warnings(&mut self) {
        let mut seen = Vec::with_capacity(self.warnings.len());
        self.warnings.retain(|w| {
            let fresh = !seen.contains(w);
            if fresh {
                seen.push(w.clone());
            }
            fresh
        });
    }

    /// Canonical JSON: sorted keys, floats cut to 10 significant digits.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        canonical_json(&value)
    }

    pub fn to_text(&self) -> String {
        render_text(self)
    }

    /// The harness table as CSV, or `None` outside harness mode.
    pub fn harness_csv(&self) -> Option<String> {
        self.harness.as_ref().map(HarnessTable::to_csv)
    }

    pub fn render(&self) -> String {
        match self.config.output {
            crate::OutputFormat::Json => self.to_json(),
            crate::OutputFormat::Text => self.to_text(),
            crate::OutputFormat::Csv => self.harness_csv().unwrap_or_default(),
        }
    }
}

pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

fn round_floats(v: &Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_significant(n.as_f64().expect("f64 number"));
            Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.iter().map(|(k, v)| (k.clone(), round_floats(v))).collect()),
        other => other.clone(),
    }
}

/// Pretty JSON with floats rounded; object keys come out sorted because
/// `serde_json::Map` is ordered.
pub fn canonical_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_floats(v)).expect("value serializes");
    s.push('\n');
    s
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn fmt_p(label: &str, p: &Option<PValue>, out: &mut String) {
    if let Some(p) = p {
        let _ = write!(out, "  {label:<11} {:.6}", p.estimate);
        if let Some(se) = p.std_error {
            let _ = write!(out, "  (se {se:.6}, nsim {})", p.nsim.unwrap_or(0));
        }
        out.push('\n');
    }
}

fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let c = &r.config;
    let mode = serde_json::to_value(c.mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let _ = writeln!(out, "steelrank: mode {mode}, alternative {}", c.alternative);
    if let Some(groups) = &r.groups {
        let names: Vec<String> = groups.iter().map(|g| format!("{} (n={})", g.label, g.size)).collect();
        let _ = writeln!(out, "groups: {}", names.join(", "));
    }
    if let Some(m) = &r.moments {
        let _ = writeln!(out, "mu = {}", fmt_vec(&m.mu));
        let _ = writeln!(out, "tau = {}", fmt_vec(&m.tau));
        let _ = writeln!(out, "sigma0 = {:.6}, sigma = {}", m.sigma0, fmt_vec(&m.sigma));
    }
    if let Some(o) = &r.observation {
        let _ = writeln!(out, "W* = {}", fmt_vec(&o.w_star));
        let _ = writeln!(out, "standardized = {}", fmt_vec(&o.standardized));
        let _ = writeln!(out, "s_max = {:.4}, s_min = {:.4}, s_abs = {:.4}", o.s_max, o.s_min, o.s_abs);
    }
    if let Some(p) = &r.p_values {
        out.push_str("p-values:\n");
        fmt_p("asymptotic", &p.asymptotic, &mut out);
        fmt_p("exact", &p.exact, &mut out);
        fmt_p("simulated", &p.simulated, &mut out);
    }
    if let Some(pw) = &r.pairwise {
        for (i, (a, b)) in pw.pairs.iter().enumerate() {
            let _ = writeln!(out, "pair ({a},{b}): W* = {:.1}, z = {:.4}", pw.w_star[i], pw.standardized[i]);
        }
        let _ = writeln!(out, "statistic = {:.4}", pw.statistic);
        out.push_str("p-values:\n");
        fmt_p("mvn", &pw.p_values.asymptotic, &mut out);
        fmt_p("simulated", &pw.p_values.simulated, &mut out);
    }
    if let Some(ci) = &r.confidence {
        let _ = writeln!(
            out,
            "simultaneous {:?} bounds at {} (one-sided level {}), achieved {:.4} (closest {:.4})",
            ci.direction, ci.nominal_gamma, ci.one_sided_level, ci.achieved_conservative, ci.achieved_closest
        );
        let k = ci.lower.as_ref().or(ci.upper.as_ref()).map_or(0, Vec::len);
        for i in 0..k {
            let lo = ci.lower.as_ref().map_or("-inf".to_string(), |b| format!("{:.6}", b[i].value));
            let hi = ci.upper.as_ref().map_or("inf".to_string(), |b| format!("{:.6}", b[i].value));
            let _ = writeln!(out, "  treatment {}: [{lo}, {hi}]", i + 1);
        }
    }
    if let Some(h) = &r.harness {
        out.push_str(&h.to_csv());
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_rounding() {
        assert_eq!(round_significant(0.123456789012345), 0.1234567890);
        assert_eq!(round_significant(-1.7713374638), -1.771337464);
        assert_eq!(round_significant(18.0), 18.0);
        assert_eq!(round_significant(0.0), 0.0);
        let x = round_significant(std::f64::consts::PI);
        assert_eq!(round_significant(x), x);
    }

    #[test]
    fn canonical_json_round_trips() {
        let mut r = Report::new(RunConfig::default());
        r.warnings.push("w".into());
        r.moments = Some(MomentSummary {
            mu: vec![18.0],
            tau: vec![6.2102496],
            sigma0: 1.0 / 3.0,
            sigma: vec![4.540007],
            tie_correction_ratio: vec![0.0],
        });
        let s = r.to_json();
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(canonical_json(&back), s);
        assert!(s.contains("0.3333333333"));
        assert!(!s.contains("0.33333333333"));
        let parsed: Report = serde_json::from_str(&s).unwrap();
        assert_eq!(parsed.to_json(), s);
    }

    #[test]
    fn warnings_dedup_in_order() {
        let mut r = Report::new(RunConfig::default());
        r.warnings = vec!["b".into(), "a".into(), "b".into()];
        r.dedup_warnings();
        assert_eq!(r.warnings, vec!["b", "a"]);
    }
}
