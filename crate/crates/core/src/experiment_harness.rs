//! Scenario grid over the eight-story chain: healthy baseline, threshold
//! calibration, and single-spring damage at several severities, each row
//! checked against the expected localization pattern.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::damage_analysis::{
    analyze, calibrate_threshold, damage_indicators, expected_pattern, DamageError,
    DamageIndicators, DamageReport, Element, Spring, Verdict,
};
use crate::simulator::{
    extract_substructure_signals, generate_excitation, simulate, SimConfig, SimError,
};
use crate::structure_model::{ChainModel, ModelError, SubstructureSpec, VarxModel};
use crate::varx_estimation::{estimate_from_records, EstimationDiagnostics, EstimationError};

pub const DEFAULT_CALIBRATION_SEEDS: usize = 20;
pub const DEFAULT_BASE_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Damage(#[from] DamageError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scenario `{name}`: {source}")]
    Scenario {
        name: String,
        #[source]
        source: StageError,
    },
    #[error("threshold calibration failed: {0}")]
    CalibrationFailed(String),
    #[error("scenarios do not share one chain, substructure and simulation setup: {0}")]
    InconsistentScenarios(String),
}

impl HarnessError {
    pub fn stage(&self) -> Option<&StageError> {
        match self {
            HarnessError::Scenario { source, .. } => Some(source),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Integration on the sample grid, no sensor noise.
    Exact,
    /// Ten integration substeps per sample.
    Realistic,
}

impl Mode {
    pub fn substep_ratio(self) -> usize {
        match self {
            Mode::Exact => 1,
            Mode::Realistic => 10,
        }
    }

    pub fn severity_tolerance(self) -> f64 {
        match self {
            Mode::Exact => 0.01,
            Mode::Realistic => 0.02,
        }
    }

    /// Applies the mode's integration settings to `sim`.
    pub fn configure(self, sim: &SimConfig) -> SimConfig {
        let mut sim = sim.clone();
        sim.substep_ratio = self.substep_ratio();
        if self == Mode::Exact {
            sim.measurement_noise_std = 0.0;
        }
        sim
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Realistic => "realistic",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Mode::Exact),
            "realistic" => Ok(Mode::Realistic),
            _ => Err(format!("unknown mode `{s}` (expected exact or realistic)")),
        }
    }
}

/// Replaces the derived expectation of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationOverride {
    pub scenario: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub spring: Option<Spring>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteSettings {
    pub mode: Option<Mode>,
    pub base_seed: u64,
    pub springs: Vec<usize>,
    pub severities: Vec<f64>,
    pub calibration_seeds: usize,
    /// Overrides the mode's severity tolerance.
    pub severity_tolerance: Option<f64>,
    pub expectations: Vec<ExpectationOverride>,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self {
            mode: None,
            base_seed: DEFAULT_BASE_SEED,
            springs: vec![1, 3, 4, 5, 6, 8],
            severities: vec![0.05, 0.10, 0.20],
            calibration_seeds: DEFAULT_CALIBRATION_SEEDS,
            severity_tolerance: None,
            expectations: Vec::new(),
        }
    }
}

/// Chain, substructure, simulation and suite settings in one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub chain: ChainModel,
    pub substructure: SubstructureSpec,
    pub sim: SimConfig,
    /// Excited DOF; the top of the chain when absent.
    pub excitation_dof: Option<usize>,
    pub suite: SuiteSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            chain: ChainModel::eight_story(),
            substructure: SubstructureSpec::three_internal(),
            sim: SimConfig::default(),
            excitation_dof: None,
            suite: SuiteSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn excited_dof(&self) -> usize {
        self.excitation_dof.unwrap_or(self.chain.dofs())
    }

    /// Simulation settings with the suite mode applied, when one is set.
    pub fn effective_sim(&self) -> SimConfig {
        match self.suite.mode {
            Some(mode) => mode.configure(&self.sim),
            None => self.sim.clone(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.suite.mode.unwrap_or(Mode::Exact)
    }

    pub fn validate(&self) -> Result<(), StageError> {
        self.substructure.validate_for(&self.chain)?;
        self.effective_sim().validate()?;
        let dof = self.excited_dof();
        if dof == 0 || dof > self.chain.dofs() {
            return Err(SimError::InvalidDof {
                dof,
                dofs: self.chain.dofs(),
            }
            .into());
        }
        for &spring in &self.suite.springs {
            self.chain.with_damage(spring, 0.0)?;
        }
        for &severity in &self.suite.severities {
            if !(severity > 0.0 && severity < 1.0) {
                return Err(ModelError::SeverityOutOfRange(severity).into());
            }
        }
        Ok(())
    }

    /// Healthy scenario followed by every (spring, severity) pair,
    /// spring-major; scenario `i` uses seed `base_seed + i`.
    pub fn scenarios(&self) -> Vec<ScenarioSpec> {
        let mode = self.mode();
        let sim = mode.configure(&self.sim);
        let tolerance = self
            .suite
            .severity_tolerance
            .unwrap_or(mode.severity_tolerance());
        let mut cases = vec![(None, 0.0)];
        for &spring in &self.suite.springs {
            for &severity in &self.suite.severities {
                cases.push((Some(Spring(spring)), severity));
            }
        }
        cases
            .into_iter()
            .enumerate()
            .map(|(index, (spring, severity))| {
                let seed = self.suite.base_seed.wrapping_add(index as u64);
                let name = scenario_name(spring, severity);
                let mut expected = Expectation::derive(&self.substructure, spring, severity);
                if let Some(o) = self.suite.expectations.iter().find(|o| o.scenario == name) {
                    expected.verdict = o.verdict;
                    expected.spring = o.spring;
                }
                ScenarioSpec {
                    name,
                    spring,
                    severity,
                    seed,
                    sim: SimConfig { seed, ..sim.clone() },
                    spec: self.substructure,
                    chain: self.chain.clone(),
                    excitation_dof: self.excited_dof(),
                    expected,
                    severity_tolerance: tolerance,
                }
            })
            .collect()
    }
}

fn scenario_name(spring: Option<Spring>, severity: f64) -> String {
    match spring {
        None => "healthy".to_string(),
        Some(s) => {
            let pct = severity * 100.0;
            if (pct - pct.round()).abs() < 1e-9 {
                format!("{s}-{:.0}%", pct.round())
            } else {
                format!("{s}-{pct}%")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub verdict: Verdict,
    pub spring: Option<Spring>,
    /// A1 elements expected above threshold.
    pub pattern: Vec<Element>,
    pub severity: Option<f64>,
}

impl Expectation {
    pub fn derive(spec: &SubstructureSpec, spring: Option<Spring>, severity: f64) -> Self {
        match spring {
            Some(s) if spec.contains_spring(s.0) => Self {
                verdict: Verdict::Damaged,
                spring: Some(s),
                pattern: expected_pattern(spec, s).into_iter().collect(),
                severity: Some(severity),
            },
            _ => Self {
                verdict: Verdict::Healthy,
                spring: None,
                pattern: Vec::new(),
                severity: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub spring: Option<Spring>,
    pub severity: f64,
    pub seed: u64,
    pub sim: SimConfig,
    pub spec: SubstructureSpec,
    /// Healthy chain; damage is applied when the scenario runs.
    pub chain: ChainModel,
    pub excitation_dof: usize,
    pub expected: Expectation,
    pub severity_tolerance: f64,
}

/// The eight-story grid: 1 healthy + 6 springs x 3 severities.
pub fn paper_suite(base_seed: u64, mode: Mode) -> Vec<ScenarioSpec> {
    let config = ExperimentConfig {
        suite: SuiteSettings {
            mode: Some(mode),
            base_seed,
            ..SuiteSettings::default()
        },
        ..ExperimentConfig::default()
    };
    config.scenarios()
}

/// Simulate `chain` and estimate the substructure model from the record.
pub fn identify(
    chain: &ChainModel,
    spec: &SubstructureSpec,
    sim: &SimConfig,
    excitation_dof: usize,
) -> Result<(VarxModel, EstimationDiagnostics), StageError> {
    let force = generate_excitation(sim, excitation_dof)?;
    let record = simulate(chain, &force, sim)?;
    let (endog, exog) = extract_substructure_signals(&record, spec)?;
    Ok(estimate_from_records(&endog, &exog)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub scenario: String,
    pub spring: Option<Spring>,
    pub severity: f64,
    pub seed: u64,
    pub expected: Expectation,
    pub report: DamageReport,
    pub diagnostics: EstimationDiagnostics,
    pub pass: bool,
}

fn judge(expected: &Expectation, report: &DamageReport, tolerance: f64) -> bool {
    if report.verdict != expected.verdict || report.localized_spring != expected.spring {
        return false;
    }
    match (expected.verdict, expected.severity) {
        (Verdict::Damaged, Some(target)) => report
            .severity_estimate
            .is_some_and(|s| (s - target).abs() <= tolerance),
        _ => true,
    }
}

pub fn run_scenario(
    scenario: &ScenarioSpec,
    baseline: &VarxModel,
    threshold: f64,
) -> Result<ScenarioRow, HarnessError> {
    let wrap = |source: StageError| HarnessError::Scenario {
        name: scenario.name.clone(),
        source,
    };
    let chain = match scenario.spring {
        Some(s) => scenario
            .chain
            .with_damage(s.0, scenario.severity)
            .map_err(|e| wrap(e.into()))?,
        None => scenario.chain.clone(),
    };
    let (model, diagnostics) =
        identify(&chain, &scenario.spec, &scenario.sim, scenario.excitation_dof).map_err(wrap)?;
    let report =
        analyze(&model, baseline, threshold, &scenario.spec).map_err(|e| wrap(e.into()))?;
    let pass = judge(&scenario.expected, &report, scenario.severity_tolerance);
    Ok(ScenarioRow {
        scenario: scenario.name.clone(),
        spring: scenario.spring,
        severity: scenario.severity,
        seed: scenario.seed,
        expected: scenario.expected.clone(),
        report,
        diagnostics,
        pass,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteMetadata {
    pub baseline_seed: Option<u64>,
    pub calibration_seeds: Vec<u64>,
    pub scenario_seeds: Vec<u64>,
    pub threshold: Option<f64>,
    pub baseline_id: Option<String>,
    /// SHA-256 of the serialized scenario list.
    pub config_digest: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub metadata: SuiteMetadata,
    pub baseline: Option<VarxModel>,
    pub calibration: Vec<DamageIndicators>,
    pub rows: Vec<ScenarioRow>,
}

impl SuiteResult {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn passed(&self) -> usize {
        self.rows.iter().filter(|r| r.pass).count()
    }
}

fn digest(scenarios: &[ScenarioSpec]) -> String {
    let doc = serde_json::to_vec(scenarios).expect("scenarios serialize");
    hex::encode(Sha256::digest(&doc))
}

fn check_consistent(scenarios: &[ScenarioSpec]) -> Result<(), HarnessError> {
    let first = &scenarios[0];
    for s in &scenarios[1..] {
        let same_sim = SimConfig { seed: first.sim.seed, ..s.sim.clone() } == first.sim;
        if s.chain != first.chain
            || s.spec != first.spec
            || s.excitation_dof != first.excitation_dof
            || !same_sim
        {
            return Err(HarnessError::InconsistentScenarios(format!(
                "`{}` differs from `{}`",
                s.name, first.name
            )));
        }
    }
    Ok(())
}

/// Baseline, calibration and scenario execution.
///
/// The baseline uses the seed after the largest scenario seed and the
/// calibration runs the seeds after that, so no simulation shares a seed.
/// Rows run concurrently and are merged in scenario order.
pub fn run_suite(
    scenarios: &[ScenarioSpec],
    calibration_seeds: usize,
) -> Result<SuiteResult, HarnessError> {
    if calibration_seeds < crate::damage_analysis::MIN_CALIBRATION_RUNS {
        return Err(HarnessError::CalibrationFailed(
            DamageError::TooFewRuns(calibration_seeds).to_string(),
        ));
    }
    if scenarios.is_empty() {
        return Ok(SuiteResult::default());
    }
    check_consistent(scenarios)?;
    let template = &scenarios[0];
    let last_seed = scenarios.iter().map(|s| s.seed).max().unwrap_or(0);
    let baseline_seed = last_seed.wrapping_add(1);
    let cal_seeds: Vec<u64> = (0..calibration_seeds as u64)
        .map(|i| baseline_seed.wrapping_add(1 + i))
        .collect();

    let healthy = |seed: u64, name: String| {
        let sim = SimConfig { seed, ..template.sim.clone() };
        identify(&template.chain, &template.spec, &sim, template.excitation_dof)
            .map(|(model, _)| model)
            .map_err(|source| HarnessError::Scenario { name, source })
    };

    let baseline = healthy(baseline_seed, "baseline".into())?;
    let calibration = cal_seeds
        .par_iter()
        .map(|&seed| {
            let name = format!("calibration-{seed}");
            let model = healthy(seed, name.clone())?;
            damage_indicators(&model, &baseline).map_err(|e| HarnessError::Scenario {
                name,
                source: e.into(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let threshold = calibrate_threshold(&calibration)
        .map_err(|e| HarnessError::CalibrationFailed(e.to_string()))?;

    let rows = scenarios
        .par_iter()
        .map(|s| run_scenario(s, &baseline, threshold))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(SuiteResult {
        metadata: SuiteMetadata {
            baseline_seed: Some(baseline_seed),
            calibration_seeds: cal_seeds,
            scenario_seeds: scenarios.iter().map(|s| s.seed).collect(),
            threshold: Some(threshold),
            baseline_id: Some(crate::damage_analysis::model_id(&baseline)),
            config_digest: digest(scenarios),
        },
        baseline: Some(baseline),
        calibration,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Comma-separated, one row per scenario.
    Table,
    /// Full nested JSON document.
    Structured,
}

pub const TABLE_HEADER: [&str; 8] = [
    "scenario",
    "spring",
    "severity",
    "verdict",
    "localized_spring",
    "estimated_severity",
    "max_di",
    "pass",
];

pub fn emit_report(result: &SuiteResult, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            serde_json::to_string_pretty(result).expect("suite result serializes") + "\n"
        }
        ReportFormat::Table => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(TABLE_HEADER).expect("in-memory write");
            for row in &result.rows {
                let opt = |v: Option<String>| v.unwrap_or_default();
                w.write_record([
                    row.scenario.clone(),
                    opt(row.spring.map(|s| s.to_string())),
                    row.severity.to_string(),
                    row.report.verdict.to_string(),
                    opt(row.report.localized_spring.map(|s| s.to_string())),
                    opt(row.report.severity_estimate.map(|s| s.to_string())),
                    row.report.indicators.max().to_string(),
                    row.pass.to_string(),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 table")
        }
    }
}

pub fn parse_structured(text: &str) -> Result<SuiteResult, serde_json::Error> {
    serde_json::from_str(text)
}
