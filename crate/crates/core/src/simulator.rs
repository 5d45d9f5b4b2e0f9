//! White-noise excitation and explicit central-difference integration of the
//! undamped chain, plus the CSV layout for force and displacement records.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure_model::{ChainModel, SubstructureSpec};

/// ChaCha stream carrying measurement noise; the force uses stream 0.
const NOISE_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(
        "integration step {step:e} s is not below the stability limit {limit:e} s \
         (2 / {bound} rad/s); reduce ts or raise substep_ratio to at least {min_ratio}"
    )]
    StabilityViolation {
        step: f64,
        bound: f64,
        limit: f64,
        min_ratio: usize,
    },
    #[error("excited DOF {dof} is outside 1..={dofs}")]
    InvalidDof { dof: usize, dofs: usize },
    #[error("force record does not match config: {0}")]
    ForceMismatch(String),
    #[error("record has no channel z{0}")]
    MissingChannel(usize),
    #[error("record needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Output sample period (s).
    pub ts: f64,
    /// Integration substeps per output sample.
    pub substep_ratio: usize,
    /// Simulated time (s).
    pub duration: f64,
    /// Standard deviation of the excitation force (N).
    pub force_std: f64,
    pub seed: u64,
    /// Sensor noise standard deviation (m); 0 disables.
    pub measurement_noise_std: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ts: 1e-3,
            substep_ratio: 1,
            duration: 20.0,
            force_std: 1.0,
            seed: 42,
            measurement_noise_std: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.ts.is_finite() && self.ts > 0.0) {
            return bad(format!("ts must be positive, got {}", self.ts));
        }
        if self.substep_ratio < 1 {
            return bad("substep_ratio must be >= 1".into());
        }
        if !(self.duration.is_finite() && self.duration >= 3.0 * self.ts) {
            return bad(format!(
                "duration must be at least 3 * ts ({}), got {}",
                3.0 * self.ts,
                self.duration
            ));
        }
        if !(self.force_std.is_finite() && self.force_std > 0.0) {
            return bad(format!("force_std must be positive, got {}", self.force_std));
        }
        if !(self.measurement_noise_std.is_finite() && self.measurement_noise_std >= 0.0) {
            return bad(format!(
                "measurement_noise_std must be >= 0, got {}",
                self.measurement_noise_std
            ));
        }
        Ok(())
    }

    /// Integration step `ts / substep_ratio`.
    pub fn step(&self) -> f64 {
        self.ts / self.substep_ratio as f64
    }

    /// Number of output samples, starting at t = 0.
    pub fn output_len(&self) -> usize {
        (self.duration / self.ts).round() as usize
    }

    /// Number of integration-grid samples.
    pub fn fine_len(&self) -> usize {
        self.output_len() * self.substep_ratio
    }
}

/// Force samples applied at one DOF on the integration grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceRecord {
    pub samples: Vec<f64>,
    pub dof: usize,
    pub dt: f64,
    pub seed: u64,
}

impl ForceRecord {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|f| f * factor).collect(),
            ..self.clone()
        }
    }

    /// Writes `t,f` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "f"])?;
        for (n, f) in self.samples.iter().enumerate() {
            w.write_record([fmt_sci(n as f64 * self.dt), fmt_sci(*f)])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Zero-mean Gaussian force at `dof`, one sample per integration step.
pub fn generate_excitation(config: &SimConfig, dof: usize) -> Result<ForceRecord, SimError> {
    config.validate()?;
    let normal = Normal::new(0.0, config.force_std)
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let samples = (0..config.fine_len()).map(|_| normal.sample(&mut rng)).collect();
    Ok(ForceRecord {
        samples,
        dof,
        dt: config.step(),
        seed: config.seed,
    })
}

/// Sampled displacements, one row per sample and one column per DOF.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementRecord {
    pub data: DMatrix<f64>,
    pub dt: f64,
    pub dof_labels: Vec<usize>,
}

impl DisplacementRecord {
    pub fn new(data: DMatrix<f64>, dt: f64, dof_labels: Vec<usize>) -> Result<Self, SimError> {
        if data.ncols() != dof_labels.len() {
            return Err(SimError::Malformed(format!(
                "{} columns but {} labels",
                data.ncols(),
                dof_labels.len()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SimError::Malformed(format!("dt must be positive, got {dt}")));
        }
        if data.nrows() < 3 {
            return Err(SimError::TooFewSamples(data.nrows()));
        }
        Ok(Self {
            data,
            dt,
            dof_labels,
        })
    }

    pub fn samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.amax()
    }

    pub fn column_of(&self, dof: usize) -> Option<usize> {
        self.dof_labels.iter().position(|&l| l == dof)
    }

    /// Columns for `dofs`, in the requested order.
    pub fn select(&self, dofs: &[usize]) -> Result<Self, SimError> {
        let cols = dofs
            .iter()
            .map(|&d| self.column_of(d).ok_or(SimError::MissingChannel(d)))
            .collect::<Result<Vec<_>, _>>()?;
        let data = DMatrix::from_fn(self.samples(), cols.len(), |r, c| self.data[(r, cols[c])]);
        Ok(Self {
            data,
            dt: self.dt,
            dof_labels: dofs.to_vec(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            data: &self.data * factor,
            ..self.clone()
        }
    }

    /// Writes the `t,z1,...` layout with 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain(self.dof_labels.iter().map(|d| format!("z{d}")))
            .collect();
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for n in 0..self.samples() {
            row.clear();
            row.push(fmt_sci(n as f64 * self.dt));
            row.extend(self.data.row(n).iter().map(|v| fmt_sci(*v)));
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, SimError> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("t") {
            return Err(SimError::Malformed("first column must be `t`".into()));
        }
        let labels = headers
            .iter()
            .skip(1)
            .map(|h| {
                h.strip_prefix('z')
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| SimError::Malformed(format!("bad column header `{h}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| {
                    SimError::Malformed(format!("row {}: `{s}`: {e}", line + 2))
                })
            };
            times.push(parse(rec.get(0).unwrap_or(""))?);
            for v in rec.iter().skip(1) {
                values.push(parse(v)?);
            }
        }
        if times.len() < 3 {
            return Err(SimError::TooFewSamples(times.len()));
        }
        let dt = times[1] - times[0];
        for (n, t) in times.iter().enumerate() {
            let expected = times[0] + n as f64 * dt;
            if (t - expected).abs() > 1e-9 * dt.max(expected.abs()) {
                return Err(SimError::Malformed(format!(
                    "non-uniform time column at row {}",
                    n + 2
                )));
            }
        }
        let data = DMatrix::from_row_slice(times.len(), labels.len(), &values);
        Self::new(data, dt, labels)
    }
}

fn fmt_sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// Checks the explicit-integration stability limit `h < 2 / omega_max`.
pub fn check_stability(model: &ChainModel, config: &SimConfig) -> Result<(), SimError> {
    let bound = model.max_frequency_bound();
    let limit = 2.0 / bound;
    let step = config.step();
    if step >= limit {
        let min_ratio = (config.ts / limit).floor() as usize + 1;
        return Err(SimError::StabilityViolation {
            step,
            bound,
            limit,
            min_ratio,
        });
    }
    Ok(())
}

/// Integrates the full chain from rest under `force` and returns every
/// `substep_ratio`-th sample of all DOFs.
pub fn simulate(
    model: &ChainModel,
    force: &ForceRecord,
    config: &SimConfig,
) -> Result<DisplacementRecord, SimError> {
    config.validate()?;
    check_stability(model, config)?;
    let n = model.dofs();
    if force.dof == 0 || force.dof > n {
        return Err(SimError::InvalidDof {
            dof: force.dof,
            dofs: n,
        });
    }
    let h = config.step();
    if force.dt != h {
        return Err(SimError::ForceMismatch(format!(
            "dt {} differs from integration step {h}",
            force.dt
        )));
    }
    let steps = config.fine_len();
    if force.samples.len() != steps {
        return Err(SimError::ForceMismatch(format!(
            "{} samples, expected {steps}",
            force.samples.len()
        )));
    }

    let h2 = h * h;
    let gain: Vec<f64> = model.masses().iter().map(|m| h2 / m).collect();
    let k = model.stiffnesses();
    let fdof = force.dof - 1;
    let ratio = config.substep_ratio;

    let mut out = DMatrix::zeros(config.output_len(), n);
    let mut prev = vec![0.0; n];
    let mut curr = vec![0.0; n];
    let mut next = vec![0.0; n];

    // At rest: z(1) = h^2/2 M^-1 F(0).
    if steps > 1 {
        next[fdof] = 0.5 * gain[fdof] * force.samples[0];
        if ratio == 1 {
            out.set_row(1, &nalgebra::RowDVector::from_row_slice(&next));
        }
        std::mem::swap(&mut curr, &mut next);
    }
    for step in 1..steps - 1 {
        for j in 0..n {
            let below = if j == 0 { 0.0 } else { curr[j - 1] };
            let mut restoring = k[j] * (curr[j] - below);
            if j + 1 < n {
                restoring += k[j + 1] * (curr[j] - curr[j + 1]);
            }
            let applied = if j == fdof { force.samples[step] } else { 0.0 };
            next[j] = 2.0 * curr[j] - prev[j] + gain[j] * (applied - restoring);
        }
        std::mem::swap(&mut prev, &mut curr);
        std::mem::swap(&mut curr, &mut next);
        let index = step + 1;
        if index % ratio == 0 {
            let row = index / ratio;
            for j in 0..n {
                out[(row, j)] = curr[j];
            }
        }
    }

    if config.measurement_noise_std > 0.0 {
        let normal = Normal::new(0.0, config.measurement_noise_std)
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(NOISE_STREAM);
        for v in out.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }

    DisplacementRecord::new(out, config.ts, (1..=n).collect())
}

/// Splits a record into internal (endogenous) and `[lower, upper]` interface
/// (exogenous) channels.
pub fn extract_substructure_signals(
    record: &DisplacementRecord,
    spec: &SubstructureSpec,
) -> Result<(DisplacementRecord, DisplacementRecord), SimError> {
    let endogenous = record.select(&spec.internal_dofs())?;
    let exogenous = record.select(&spec.interface_dofs())?;
    Ok((endogenous, exogenous))
}
