//! Run configuration and its command-line form.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use steelrank::confidence::Direction;
use steelrank::randomization::DEFAULT_SPLIT_BUDGET;
use steelrank::ranks::DEFAULT_EPSILON;
use steelrank::Alternative;

use crate::harness::Scenario;
use crate::input::Format;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Many-to-one Steel test against the control group.
    Steel,
    /// All pairwise comparisons among the groups.
    Pairwise,
    /// Simultaneous confidence bounds for shifts against the control.
    Confidence,
    /// Simulated versus asymptotic tail probabilities over a threshold grid.
    #[value(name = "quality_harness", alias = "quality-harness")]
    QualityHarness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Asymptotic,
    Simulated,
    Exact,
    /// Asymptotic, plus exact when enumeration fits the budget, else simulated.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Text,
    /// Harness table only.
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Upper,
    Lower,
    Interval,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Upper => Direction::Upper,
            DirectionArg::Lower => Direction::Lower,
            DirectionArg::Interval => Direction::Interval,
        }
    }
}

/// Everything that determines a report. Echoed verbatim into the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub format: Format,
    pub control: Option<String>,
    pub alternative: Alternative,
    pub method: MethodChoice,
    pub nsim: u64,
    pub seed: u64,
    pub plus_one: bool,
    pub exact_budget: u64,
    pub conf_level: f64,
    pub round_eps: f64,
    pub direction: Direction,
    pub mode: Mode,
    pub nodes: usize,
    pub output: OutputFormat,
    pub epsilon: f64,
    pub round_digits: Option<i32>,
    pub harness: HarnessConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub scenario: Option<Scenario>,
    pub sizes: Vec<usize>,
    pub data_seed: u64,
    pub thresholds: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            format: Format::CsvLong,
            control: None,
            alternative: Alternative::Greater,
            method: MethodChoice::All,
            nsim: 100_000,
            seed: 1,
            plus_one: false,
            exact_budget: DEFAULT_SPLIT_BUDGET,
            conf_level: 0.95,
            round_eps: 0.0,
            direction: Direction::Interval,
            mode: Mode::Steel,
            nodes: 160,
            output: OutputFormat::Json,
            epsilon: DEFAULT_EPSILON,
            round_digits: None,
            harness: HarnessConfig { scenario: None, sizes: vec![100, 100, 100], data_seed: 1, thresholds: None },
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let simulates =
            self.mode == Mode::QualityHarness || self.method != MethodChoice::Asymptotic || self.mode == Mode::Pairwise;
        if simulates && self.nsim == 0 {
            return bad("--nsim must be at least 1".into());
        }
        if !(self.conf_level > 0.0 && self.conf_level < 1.0) {
            return bad(format!("--conf-level must lie in (0, 1), got {}", self.conf_level));
        }
        if !(self.round_eps >= 0.0 && self.round_eps.is_finite()) {
            return bad(format!("--round-eps must be finite and nonnegative, got {}", self.round_eps));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("--epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.nodes == 0 {
            return bad("--nodes must be positive".into());
        }
        if self.output == OutputFormat::Csv && self.mode != Mode::QualityHarness {
            return bad("--output csv is only available with --mode quality_harness".into());
        }
        if self.mode == Mode::QualityHarness {
            if self.inputs.is_empty() == self.harness.scenario.is_none() {
                return bad("quality_harness needs exactly one of --input or --scenario".into());
            }
            if self.harness.scenario.is_some() && (self.harness.sizes.len() < 2 || self.harness.sizes.contains(&0)) {
                return bad("--sizes needs at least two positive group sizes".into());
            }
        }
        Ok(())
    }
}

/// Steel's many-to-one rank test with ties, and related procedures.
#[derive(Debug, Parser)]
#[command(name = "steelrank", version, about)]
pub struct Cli {
    /// Data file; repeat to combine several files.
    #[arg(long = "input", short = 'i')]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "csv_long")]
    format: Format,
    /// Label of the control group (default: the first group read).
    #[arg(long)]
    control: Option<String>,
    /// greater, less or two-sided.
    #[arg(long, default_value = "greater")]
    alternative: Alternative,
    #[arg(long, value_enum, default_value = "all")]
    method: MethodChoice,
    #[arg(long, default_value_t = 100_000)]
    nsim: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Report (hits + 1)/(nsim + 1) for simulated p-values.
    #[arg(long)]
    plus_one: bool,
    /// Largest number of distinct splits exact enumeration may visit.
    #[arg(long, default_value_t = DEFAULT_SPLIT_BUDGET)]
    exact_budget: u64,
    #[arg(long, default_value_t = 0.95)]
    conf_level: f64,
    /// Half-width of the rounding grid the data were recorded on.
    #[arg(long, default_value_t = 0.0)]
    round_eps: f64,
    /// Bound type in confidence mode.
    #[arg(long, value_enum, default_value = "interval")]
    direction: DirectionArg,
    #[arg(long, value_enum, default_value = "steel")]
    mode: Mode,
    /// Gauss–Legendre nodes for the normal approximation.
    #[arg(long, default_value_t = 160)]
    nodes: usize,
    #[arg(long, value_enum, default_value = "json")]
    output: OutputFormat,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output_file: Option<PathBuf>,
    /// Tie fraction margin for the large-sample diagnostics.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Round input values to this many decimals before ranking.
    #[arg(long, allow_negative_numbers = true)]
    round_digits: Option<i32>,
    /// Synthetic data for the harness.
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,
    /// Group sizes for synthetic data, control first.
    #[arg(long, value_delimiter = ',', default_value = "100,100,100")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
    /// Harness thresholds on the standardized scale (default: a grid of
    /// asymptotic tail levels).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    thresholds: Option<Vec<f64>>,
}

impl Cli {
    pub fn output_file(&self) -> Option<&PathBuf> {
        self.output_file.as_ref()
    }

    pub fn config(&self) -> RunConfig {
        RunConfig {
            inputs: self.inputs.clone(),
            format: self.format,
            control: self.control.clone(),
            alternative: self.alternative,
            method: self.method,
            nsim: self.nsim,
            seed: self.seed,
            plus_one: self.plus_one,
            exact_budget: self.exact_budget,
            conf_level: self.conf_level,
            round_eps: self.round_eps,
            direction: self.direction.into(),
            mode: self.mode,
            nodes: self.nodes,
            output: self.output,
            epsilon: self.epsilon,
            round_digits: self.round_digits,
            harness: HarnessConfig {
                scenario: self.scenario,
                sizes: self.sizes.clone(),
                data_seed: self.data_seed,
                thresholds: self.thresholds.clone(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        Cli::try_parse_from(std::iter::once("steelrank").chain(args.iter().copied())).unwrap().config()
    }

    #[test]
    fn defaults_match_config_default() {
        assert_eq!(parse(&[]), RunConfig::default());
    }

    #[test]
    fn flags_parse() {
        let c = parse(&[
            "--input",
            "a.csv",
            "--format",
            "whitespace",
            "--alternative",
            "two-sided",
            "--method",
            "exact",
            "--mode",
            "quality_harness",
            "--sizes",
            "5,6,7",
            "--thresholds",
            "-1.5,0,2",
            "--direction",
            "lower",
        ]);
        assert_eq!(c.inputs, vec![PathBuf::from("a.csv")]);
        assert_eq!(c.format, Format::Whitespace);
        assert_eq!(c.alternative, Alternative::TwoSided);
        assert_eq!(c.method, MethodChoice::Exact);
        assert_eq!(c.mode, Mode::QualityHarness);
        assert_eq!(c.harness.sizes, vec![5, 6, 7]);
        assert_eq!(c.harness.thresholds, Some(vec![-1.5, 0.0, 2.0]));
        assert_eq!(c.direction, Direction::Lower);
    }

    #[test]
    fn validation() {
        let ok = RunConfig { inputs: vec!["x".into()], ..RunConfig::default() };
        assert!(ok.validate().is_ok());
        for bad in [
            RunConfig { nsim: 0, ..ok.clone() },
            RunConfig { conf_level: 1.0, ..ok.clone() },
            RunConfig { round_eps: -0.1, ..ok.clone() },
            RunConfig { epsilon: 0.0, ..ok.clone() },
            RunConfig { output: OutputFormat::Csv, ..ok.clone() },
            RunConfig { mode: Mode::QualityHarness, inputs: vec![], ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(CliError::Config(_))), "{bad:?}");
        }
        let asymptotic_only = RunConfig { nsim: 0, method: MethodChoice::Asymptotic, ..ok };
        assert!(asymptotic_only.validate().is_ok());
    }
}
