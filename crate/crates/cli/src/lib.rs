//! Command-line front end for `steelrank`: reads grouped data, runs the
//! requested analysis and renders a versioned report.

pub mod config;
pub mod harness;
pub mod input;
pub mod report;

use steelrank::confidence::simultaneous_bounds_with;
use steelrank::gauss::tail_prob;
use steelrank::moments::factor_decomposition;
use steelrank::pairwise::{pairwise_test, PairwiseMethod};
use steelrank::randomization::{exact_p_value_with_budget, simulate_p_value, MonteCarlo, PValue};
use steelrank::ranks::check_asymptotic_conditions;
use steelrank::statistics::steel_statistics;
use steelrank::{FactorModel, RankedSamples};

pub use config::{MethodChoice, Mode, OutputFormat, RunConfig};
pub use report::Report;

use input::GroupedData;
use report::{GroupInfo, MomentSummary, PValues, PairwiseReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown group '{0}'")]
    UnknownGroup(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("exact enumeration needs more than {budget} distinct splits; rerun with --method simulated")]
    Budget { budget: u64 },
    #[error(transparent)]
    Library(steelrank::Error),
}

impl From<steelrank::Error> for CliError {
    fn from(e: steelrank::Error) -> Self {
        match e {
            steelrank::Error::BudgetExceeded { budget } => CliError::Budget { budget },
            other => CliError::Library(other),
        }
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Parse { .. } => "parse",
            CliError::UnknownGroup(_) => "unknown_group",
            CliError::Config(_) => "config",
            CliError::Budget { .. } => "budget_exceeded",
            CliError::Library(_) => "computation",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Library(_) => 1,
            _ => 2,
        }
    }

    /// One-line JSON object describing the failure.
    pub fn to_json(&self) -> String {
        let mut body = serde_json::json!({
            "kind": self.kind(),
            "message": self.to_string(),
        });
        if let CliError::Parse { line, .. } = self {
            body["line"] = (*line).into();
        }
        serde_json::json!({ "error": body }).to_string()
    }
}

fn mc_settings(config: &RunConfig, threads: Option<usize>) -> MonteCarlo {
    let mut mc = MonteCarlo::new(config.nsim, config.seed).with_threads(threads);
    mc.plus_one = config.plus_one;
    mc
}

fn load(config: &RunConfig) -> Result<GroupedData, CliError> {
    if config.inputs.is_empty() {
        return Err(CliError::Config("no --input given".into()));
    }
    let mut data = input::read_inputs(&config.inputs, config.format)?;
    if data.labels.is_empty() {
        return Err(CliError::Config("input contains no observations".into()));
    }
    if let Some(control) = &config.control {
        data = data.with_control_first(control)?;
    }
    if let Some(digits) = config.round_digits {
        data = data.rounded(digits);
    }
    Ok(data)
}

/// Runs one analysis. `threads` caps Monte Carlo workers and never changes
/// the report.
pub fn run(config: &RunConfig, threads: Option<usize>) -> Result<Report, CliError> {
    config.validate()?;
    let mut report = Report::new(config.clone());
    if config.mode == Mode::QualityHarness {
        let data = if config.inputs.is_empty() { None } else { Some(load(config)?) };
        harness::run(config, data, threads, &mut report)?;
        return Ok(report);
    }

    let data = load(config)?;
    report.groups = Some(
        data.labels
            .iter()
            .zip(&data.values)
            .map(|(label, v)| GroupInfo { label: label.clone(), size: v.len() })
            .collect(),
    );
    let samples = RankedSamples::new(&data.values)?;
    let diagnostics = check_asymptotic_conditions(&samples, config.epsilon)?;
    report.warnings.extend(diagnostics.warnings.iter().cloned());
    report.diagnostics = Some(diagnostics);

    match config.mode {
        Mode::Steel => run_steel(config, threads, &samples, &mut report)?,
        Mode::Pairwise => run_pairwise(config, threads, &samples, &mut report)?,
        Mode::Confidence => {
            let result = simultaneous_bounds_with(
                &data.values,
                config.conf_level,
                config.direction,
                config.round_eps,
                Some(config.nodes),
            )?;
            report.warnings.extend(result.warnings.iter().cloned());
            report.confidence = Some(result);
        }
        Mode::QualityHarness => unreachable!(),
    }
    report.dedup_warnings();
    Ok(report)
}

fn run_steel(
    config: &RunConfig,
    threads: Option<usize>,
    samples: &RankedSamples,
    report: &mut Report,
) -> Result<(), CliError> {
    let moments = factor_decomposition(samples.sizes(), samples.tie_pattern())?;
    report.warnings.extend(moments.warnings.iter().cloned());
    for (i, t2) in moments.tau2.iter().enumerate() {
        if *t2 == 0.0 {
            report
                .warnings
                .push(format!("treatment {} has zero null variance; its standardized statistic is set to 0", i + 1));
        }
    }
    let observation = steel_statistics(samples, &moments, config.alternative)?;
    let mut p = PValues::default();

    if matches!(config.method, MethodChoice::Asymptotic | MethodChoice::All) {
        let model = FactorModel::from_moments(&moments)?.with_nodes(config.nodes)?;
        p.asymptotic = Some(PValue::asymptotic(tail_prob(&model, config.alternative, observation.statistic())?));
    }
    let mut simulate = config.method == MethodChoice::Simulated;
    if matches!(config.method, MethodChoice::Exact | MethodChoice::All) {
        match exact_p_value_with_budget(samples, &observation, config.exact_budget) {
            Ok(v) => p.exact = Some(v),
            Err(steelrank::Error::BudgetExceeded { .. }) if config.method == MethodChoice::All => simulate = true,
            Err(e) => return Err(e.into()),
        }
    }
    if simulate {
        p.simulated = Some(simulate_p_value(samples, &observation, &mc_settings(config, threads))?);
    }

    report.moments = Some(MomentSummary::from(&moments));
    report.observation = Some(observation);
    report.p_values = Some(p);
    Ok(())
}

fn run_pairwise(
    config: &RunConfig,
    threads: Option<usize>,
    samples: &RankedSamples,
    report: &mut Report,
) -> Result<(), CliError> {
    let methods: &[PairwiseMethod] = match config.method {
        MethodChoice::Simulated => &[PairwiseMethod::MonteCarlo],
        MethodChoice::Asymptotic => &[PairwiseMethod::MvnSample],
        MethodChoice::All => &[PairwiseMethod::MonteCarlo, PairwiseMethod::MvnSample],
        MethodChoice::Exact => {
            return Err(CliError::Config(
                "exact p-values are not available in pairwise mode; use simulated or asymptotic".into(),
            ))
        }
    };
    let mc = mc_settings(config, threads);
    let mut out: Option<PairwiseReport> = None;
    for &method in methods {
        let r = pairwise_test(samples, config.alternative, method, &mc)?;
        let entry = out.get_or_insert_with(|| PairwiseReport::from_result(&r));
        match method {
            PairwiseMethod::MonteCarlo => entry.p_values.simulated = Some(r.p_value),
            PairwiseMethod::MvnSample => entry.p_values.asymptotic = Some(r.p_value),
        }
    }
    report.pairwise = out;
    Ok(())
}
