//! Command-line front end. Exit codes: 0 ok, 1 suite failure, 2 config or
//! input error, 3 stability violation, 4 estimation failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::damage_analysis::{analyze, calibrate_threshold, DamageError, DamageIndicators};
use crate::experiment_harness::{
    emit_report, run_suite, ExperimentConfig, HarnessError, Mode, ReportFormat, StageError,
};
use crate::simulator::{
    extract_substructure_signals, generate_excitation, simulate, DisplacementRecord, SimError,
};
use crate::structure_model::{ground_truth_varx, SubstructureSpec, VarxModel};
use crate::varx_estimation::{estimate_from_records, EstimationError};

#[derive(Debug, Parser)]
#[command(name = "varx-shm", version, about = "Substructure damage localization from VARX models")]
pub struct Cli {
    /// TOML configuration file; built-in eight-story defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the simulation seed and the suite base seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (output directory for `suite`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub mode: Option<Mode>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the analytic VARX model of the configured substructure.
    Truth,
    /// Simulate the chain and write the displacement CSV.
    Simulate {
        /// Also write the excitation as `t,f` CSV.
        #[arg(long)]
        force_out: Option<PathBuf>,
    },
    /// Estimate the substructure VARX model from a displacement CSV.
    Estimate {
        csv: PathBuf,
        /// Diagnostics document path; defaults next to `--out`.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Compare a model against a healthy baseline and localize damage. Both
    /// models must come from records simulated in the same mode.
    Analyze {
        current: PathBuf,
        baseline: PathBuf,
        #[arg(long, conflicts_with = "calibration", required_unless_present = "calibration")]
        threshold: Option<f64>,
        /// Calibration document with healthy indicator runs.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Run the full scenario grid and write table and structured reports.
    Suite,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Stability(String),
    #[error("{0}")]
    Estimation(String),
    #[error("{passed}/{total} scenarios passed")]
    SuiteFailed { passed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SuiteFailed { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Stability(_) => 3,
            CliError::Estimation(_) => 4,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::StabilityViolation { .. } => CliError::Stability(e.to_string()),
            SimError::TooFewSamples(_) => CliError::Estimation(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::TooFewSamples { .. } | EstimationError::RankDeficient { .. } => {
                CliError::Estimation(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<DamageError> for CliError {
    fn from(e: DamageError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<StageError> for CliError {
    fn from(e: StageError) -> Self {
        match e {
            StageError::Sim(e) => e.into(),
            StageError::Estimation(e) => e.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        let text = e.to_string();
        match e {
            HarnessError::Scenario { source, .. } => match CliError::from(source) {
                CliError::Stability(_) => CliError::Stability(text),
                CliError::Estimation(_) => CliError::Estimation(text),
                _ => CliError::Config(text),
            },
            _ => CliError::Config(text),
        }
    }
}

/// Configuration file layout: the experiment sections plus an optional
/// default output path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CliConfig {
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
    pub out: Option<PathBuf>,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// File values (or defaults) with command-line overrides applied, validated.
    pub fn resolve(cli: &Cli) -> Result<Self, CliError> {
        let mut config = match &cli.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if let Some(seed) = cli.seed {
            config.experiment.sim.seed = seed;
            config.experiment.suite.base_seed = seed;
        }
        if let Some(mode) = cli.mode {
            config.experiment.suite.mode = Some(mode);
        }
        if let Some(out) = &cli.out {
            config.out = Some(out.clone());
        }
        config.experiment.validate().map_err(|e| match e {
            StageError::Sim(SimError::InvalidConfig(msg)) => {
                CliError::Config(format!("sim: {msg}"))
            }
            other => CliError::Config(other.to_string()),
        })?;
        Ok(config)
    }
}

/// Healthy-state indicator runs used to derive the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCalibration {
    pub threshold: f64,
    pub runs: Vec<DamageIndicators>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

fn write_output(path: Option<&Path>, contents: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|e| io_err(p, e)),
        None => io::stdout()
            .write_all(contents)
            .map_err(|e| CliError::Config(format!("stdout: {e}"))),
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    text.into_bytes()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

pub fn read_model(path: &Path) -> Result<VarxModel, CliError> {
    read_json(path)
}

fn cmd_truth(config: &CliConfig) -> Result<(), CliError> {
    let exp = &config.experiment;
    let model = ground_truth_varx(&exp.chain, &exp.substructure, exp.effective_sim().ts)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write_output(config.out.as_deref(), &to_json(&model))
}

fn cmd_simulate(config: &CliConfig, force_out: Option<&Path>) -> Result<(), CliError> {
    let exp = &config.experiment;
    let sim = exp.effective_sim();
    let force = generate_excitation(&sim, exp.excited_dof())?;
    let record = simulate(&exp.chain, &force, &sim)?;
    let mut buf = Vec::new();
    record.write_csv(&mut buf)?;
    write_output(config.out.as_deref(), &buf)?;
    if let Some(path) = force_out {
        let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
        force.write_csv(io::BufWriter::new(file))?;
    }
    eprintln!(
        "simulated {} samples x {} DOFs (seed {}, step {:e} s)",
        record.samples(),
        record.channels(),
        sim.seed,
        sim.step()
    );
    Ok(())
}

fn cmd_estimate(config: &CliConfig, csv: &Path, diagnostics: Option<&Path>) -> Result<(), CliError> {
    let file = fs::File::open(csv).map_err(|e| io_err(csv, e))?;
    let record = DisplacementRecord::read_csv(io::BufReader::new(file))?;
    let (endog, exog) = extract_substructure_signals(&record, &config.experiment.substructure)?;
    let (model, diag) = estimate_from_records(&endog, &exog)?;
    write_output(config.out.as_deref(), &to_json(&model))?;
    let diag_path = diagnostics
        .map(Path::to_path_buf)
        .or_else(|| config.out.as_ref().map(|o| o.with_extension("diagnostics.json")));
    match diag_path {
        Some(p) => write_output(Some(&p), &to_json(&diag))?,
        None => eprintln!("{}", String::from_utf8_lossy(&to_json(&diag))),
    }
    Ok(())
}

fn cmd_analyze(
    config: &CliConfig,
    current: &Path,
    baseline: &Path,
    threshold: Option<f64>,
    calibration: Option<&Path>,
) -> Result<(), CliError> {
    let current = read_model(current)?;
    let baseline = read_model(baseline)?;
    let threshold = match (threshold, calibration) {
        (Some(t), _) if t.is_finite() && t >= 0.0 => t,
        (Some(t), _) => return Err(CliError::Config(format!("invalid threshold {t}"))),
        (None, Some(path)) => {
            let cal: ThresholdCalibration = read_json(path)?;
            calibrate_threshold(&cal.runs)?
        }
        (None, None) => return Err(CliError::Config("need --threshold or --calibration".into())),
    };
    let spec = SubstructureSpec::new(baseline.exogenous_labels[0], baseline.exogenous_labels[1])
        .map_err(|e| CliError::Config(format!("baseline labels: {e}")))?;
    let report = analyze(&current, &baseline, threshold, &spec)?;
    write_output(config.out.as_deref(), &to_json(&report))
}

fn cmd_suite(config: &CliConfig) -> Result<(), CliError> {
    let exp = &config.experiment;
    let scenarios = exp.scenarios();
    let result = run_suite(&scenarios, exp.suite.calibration_seeds)?;
    let table = emit_report(&result, ReportFormat::Table);
    let dir = config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("suite-out"));
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let write = |name: &str, bytes: &[u8]| {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| io_err(&p, e))
    };
    write("table.csv", table.as_bytes())?;
    write("report.json", emit_report(&result, ReportFormat::Structured).as_bytes())?;
    if let (Some(baseline), Some(threshold)) = (&result.baseline, result.metadata.threshold) {
        write("baseline.json", &to_json(baseline))?;
        write(
            "calibration.json",
            &to_json(&ThresholdCalibration {
                threshold,
                runs: result.calibration.clone(),
            }),
        )?;
    }
    print!("{table}");
    eprintln!(
        "{}: {}/{} scenarios passed (threshold {:.3e}), reports in {}",
        exp.mode(),
        result.passed(),
        result.rows.len(),
        result.metadata.threshold.unwrap_or(f64::NAN),
        dir.display()
    );
    if result.all_pass() {
        Ok(())
    } else {
        Err(CliError::SuiteFailed {
            passed: result.passed(),
            total: result.rows.len(),
        })
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let config = CliConfig::resolve(cli)?;
    match &cli.command {
        Command::Truth => cmd_truth(&config),
        Command::Simulate { force_out } => cmd_simulate(&config, force_out.as_deref()),
        Command::Estimate { csv, diagnostics } => {
            cmd_estimate(&config, csv, diagnostics.as_deref())
        }
        Command::Analyze {
            current,
            baseline,
            threshold,
            calibration,
        } => cmd_analyze(&config, current, baseline, *threshold, calibration.as_deref()),
        Command::Suite => cmd_suite(&config),
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
