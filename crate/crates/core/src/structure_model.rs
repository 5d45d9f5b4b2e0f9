//! Shear-building chain model, substructure partition and the analytic
//! VARX coefficient matrices implied by the central-difference discretization.
//!
//! DOFs and springs are 1-based and ordered bottom to top. Spring `j`
//! connects DOF `j - 1` (ground for `j = 1`) to DOF `j`; the top DOF has no
//! spring above it.
//!
//! A substructure bounded by interface DOFs `i` and `i + n` has internal
//! DOFs `i + 1 ..= i + n - 1`. Its discrete dynamics are
//!
//! ```text
//! z(n) = A1 z(n-1) + A2 z(n-2) + B1 u(n-1)
//! ```
//!
//! with `z` the internal displacements and `u = [z_i, z_{i+n}]` the interface
//! displacements.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("masses has {masses} entries but stiffnesses has {stiffnesses}")]
    LengthMismatch { masses: usize, stiffnesses: usize },
    #[error("a chain needs at least 2 DOFs, got {0}")]
    TooFewDofs(usize),
    #[error("{field}[{index}] must be strictly positive and finite, got {value}")]
    NonPositiveParameter {
        field: &'static str,
        /// 1-based.
        index: usize,
        value: f64,
    },
    #[error("spring index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("damage severity {0} outside [0, 1)")]
    SeverityOutOfRange(f64),
    #[error("invalid substructure: {0}")]
    InvalidSpec(String),
    #[error("sampling period must be positive and finite, got {0}")]
    InvalidSamplingPeriod(f64),
    #[error("invalid VARX model: {0}")]
    InvalidVarx(String),
}

/// Ground-anchored mass-spring chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChainDocument", into = "ChainDocument")]
pub struct ChainModel {
    masses: Vec<f64>,
    stiffnesses: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ChainDocument {
    masses: Vec<f64>,
    stiffnesses: Vec<f64>,
}

impl TryFrom<ChainDocument> for ChainModel {
    type Error = ModelError;

    fn try_from(doc: ChainDocument) -> Result<Self, Self::Error> {
        ChainModel::new(doc.masses, doc.stiffnesses)
    }
}

impl From<ChainModel> for ChainDocument {
    fn from(model: ChainModel) -> Self {
        ChainDocument {
            masses: model.masses,
            stiffnesses: model.stiffnesses,
        }
    }
}

fn check_positive(field: &'static str, values: &[f64]) -> Result<(), ModelError> {
    match values
        .iter()
        .position(|v| !(v.is_finite() && *v > 0.0))
    {
        Some(i) => Err(ModelError::NonPositiveParameter {
            field,
            index: i + 1,
            value: values[i],
        }),
        None => Ok(()),
    }
}

impl ChainModel {
    /// Validates and builds a chain from per-DOF masses (kg) and per-spring
    /// stiffnesses (N/m).
    pub fn new(masses: Vec<f64>, stiffnesses: Vec<f64>) -> Result<Self, ModelError> {
        if masses.len() != stiffnesses.len() {
            return Err(ModelError::LengthMismatch {
                masses: masses.len(),
                stiffnesses: stiffnesses.len(),
            });
        }
        if masses.len() < 2 {
            return Err(ModelError::TooFewDofs(masses.len()));
        }
        check_positive("masses", &masses)?;
        check_positive("stiffnesses", &stiffnesses)?;
        Ok(Self {
            masses,
            stiffnesses,
        })
    }

    pub fn uniform(dofs: usize, mass: f64, stiffness: f64) -> Result<Self, ModelError> {
        Self::new(vec![mass; dofs], vec![stiffness; dofs])
    }

    /// Eight floors of 100 kg joined by 1 MN/m springs.
    pub fn eight_story() -> Self {
        Self::uniform(8, 100.0, 1.0e6).expect("constant parameters are valid")
    }

    pub fn dofs(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn stiffnesses(&self) -> &[f64] {
        &self.stiffnesses
    }

    /// Mass of DOF `dof` (1-based).
    pub fn mass(&self, dof: usize) -> f64 {
        self.masses[dof - 1]
    }

    /// Stiffness of spring `spring` (1-based); `N + 1` is the absent spring
    /// above the top DOF and returns 0.
    pub fn stiffness(&self, spring: usize) -> f64 {
        if spring == self.dofs() + 1 {
            0.0
        } else {
            self.stiffnesses[spring - 1]
        }
    }

    /// Returns a copy with spring `spring` scaled by `1 - severity`.
    pub fn with_damage(&self, spring: usize, severity: f64) -> Result<Self, ModelError> {
        if spring == 0 || spring > self.dofs() {
            return Err(ModelError::IndexOutOfRange {
                index: spring,
                max: self.dofs(),
            });
        }
        if !(0.0..1.0).contains(&severity) {
            return Err(ModelError::SeverityOutOfRange(severity));
        }
        let mut damaged = self.clone();
        damaged.stiffnesses[spring - 1] *= 1.0 - severity;
        Ok(damaged)
    }

    /// Diagonal of the mass matrix and the tridiagonal stiffness matrix.
    pub fn assemble(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dofs();
        let mass = DVector::from_column_slice(&self.masses);
        let mut stiffness = DMatrix::zeros(n, n);
        for j in 1..=n {
            stiffness[(j - 1, j - 1)] = self.stiffness(j) + self.stiffness(j + 1);
            if j < n {
                let k = self.stiffness(j + 1);
                stiffness[(j - 1, j)] = -k;
                stiffness[(j, j - 1)] = -k;
            }
        }
        (mass, stiffness)
    }

    /// Gershgorin upper bound on the largest natural frequency (rad/s).
    pub fn max_frequency_bound(&self) -> f64 {
        let worst = (1..=self.dofs())
            .map(|j| (self.stiffness(j) + self.stiffness(j + 1)) / self.mass(j))
            .fold(0.0_f64, f64::max);
        (2.0 * worst).sqrt()
    }
}

/// Interface DOFs bounding a substructure (1-based, inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubstructureSpec {
    pub lower_interface: usize,
    pub upper_interface: usize,
}

impl SubstructureSpec {
    pub fn new(lower_interface: usize, upper_interface: usize) -> Result<Self, ModelError> {
        let spec = Self {
            lower_interface,
            upper_interface,
        };
        spec.check()?;
        Ok(spec)
    }

    /// Interfaces at z2 and z6, internal DOFs z3..z5.
    pub fn three_internal() -> Self {
        Self {
            lower_interface: 2,
            upper_interface: 6,
        }
    }

    fn check(&self) -> Result<(), ModelError> {
        if self.lower_interface < 1 {
            return Err(ModelError::InvalidSpec(
                "lower_interface must be >= 1".into(),
            ));
        }
        if self.upper_interface < self.lower_interface + 2 {
            return Err(ModelError::InvalidSpec(format!(
                "upper_interface ({}) must exceed lower_interface ({}) by at least 2",
                self.upper_interface, self.lower_interface
            )));
        }
        Ok(())
    }

    pub fn validate_for(&self, model: &ChainModel) -> Result<(), ModelError> {
        self.check()?;
        if self.upper_interface > model.dofs() {
            return Err(ModelError::InvalidSpec(format!(
                "upper_interface ({}) exceeds chain DOF count ({})",
                self.upper_interface,
                model.dofs()
            )));
        }
        Ok(())
    }

    /// Number of internal (endogenous) DOFs.
    pub fn internal_count(&self) -> usize {
        self.upper_interface - self.lower_interface - 1
    }

    pub fn internal_dofs(&self) -> Vec<usize> {
        (self.lower_interface + 1..self.upper_interface).collect()
    }

    pub fn interface_dofs(&self) -> [usize; 2] {
        [self.lower_interface, self.upper_interface]
    }

    /// Springs whose stiffness enters the substructure equations.
    pub fn springs(&self) -> std::ops::RangeInclusive<usize> {
        self.lower_interface + 1..=self.upper_interface
    }

    pub fn contains_spring(&self, spring: usize) -> bool {
        self.springs().contains(&spring)
    }
}

impl fmt::Display for SubstructureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z{}..z{}", self.lower_interface, self.upper_interface)
    }
}

/// VARX model `z(n) = A1 z(n-1) + A2 z(n-2) + B1 u(n-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VarxDocument", into = "VarxDocument")]
pub struct VarxModel {
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub ts: f64,
    pub endogenous_labels: Vec<usize>,
    pub exogenous_labels: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct VarxDocument {
    ts: f64,
    a1: Vec<Vec<f64>>,
    a2: Vec<Vec<f64>>,
    b1: Vec<Vec<f64>>,
    endogenous_labels: Vec<usize>,
    exogenous_labels: Vec<usize>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(name: &str, rows: &[Vec<f64>], cols: usize) -> Result<DMatrix<f64>, ModelError> {
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(ModelError::InvalidVarx(format!(
            "{name} row {} has {} entries, expected {cols}",
            bad + 1,
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

impl TryFrom<VarxDocument> for VarxModel {
    type Error = ModelError;

    fn try_from(doc: VarxDocument) -> Result<Self, Self::Error> {
        let q = doc.a1.len();
        VarxModel::new(
            from_rows("a1", &doc.a1, q)?,
            from_rows("a2", &doc.a2, q)?,
            from_rows("b1", &doc.b1, 2)?,
            doc.ts,
            doc.endogenous_labels,
            doc.exogenous_labels,
        )
    }
}

impl From<VarxModel> for VarxDocument {
    fn from(m: VarxModel) -> Self {
        VarxDocument {
            ts: m.ts,
            a1: to_rows(&m.a1),
            a2: to_rows(&m.a2),
            b1: to_rows(&m.b1),
            endogenous_labels: m.endogenous_labels,
            exogenous_labels: m.exogenous_labels,
        }
    }
}

impl VarxModel {
    pub fn new(
        a1: DMatrix<f64>,
        a2: DMatrix<f64>,
        b1: DMatrix<f64>,
        ts: f64,
        endogenous_labels: Vec<usize>,
        exogenous_labels: Vec<usize>,
    ) -> Result<Self, ModelError> {
        let q = a1.nrows();
        if q == 0 || a1.ncols() != q {
            return Err(ModelError::InvalidVarx(format!(
                "a1 must be square and non-empty, got {}x{}",
                a1.nrows(),
                a1.ncols()
            )));
        }
        if a2.shape() != (q, q) {
            return Err(ModelError::InvalidVarx(format!(
                "a2 must be {q}x{q}, got {}x{}",
                a2.nrows(),
                a2.ncols()
            )));
        }
        if b1.shape() != (q, 2) {
            return Err(ModelError::InvalidVarx(format!(
                "b1 must be {q}x2, got {}x{}",
                b1.nrows(),
                b1.ncols()
            )));
        }
        if !(ts.is_finite() && ts > 0.0) {
            return Err(ModelError::InvalidSamplingPeriod(ts));
        }
        if endogenous_labels.len() != q || exogenous_labels.len() != 2 {
            return Err(ModelError::InvalidVarx(format!(
                "expected {q} endogenous and 2 exogenous labels, got {} and {}",
                endogenous_labels.len(),
                exogenous_labels.len()
            )));
        }
        Ok(Self {
            a1,
            a2,
            b1,
            ts,
            endogenous_labels,
            exogenous_labels,
        })
    }

    /// Endogenous dimension.
    pub fn dim(&self) -> usize {
        self.a1.nrows()
    }

    /// `[A1 A2 B1]` as one `q x (2q + 2)` block.
    pub fn coefficient_block(&self) -> DMatrix<f64> {
        let q = self.dim();
        let mut block = DMatrix::zeros(q, 2 * q + 2);
        block.view_mut((0, 0), (q, q)).copy_from(&self.a1);
        block.view_mut((0, q), (q, q)).copy_from(&self.a2);
        block.view_mut((0, 2 * q), (q, 2)).copy_from(&self.b1);
        block
    }
}

/// Analytic VARX matrices of a substructure sampled at period `ts`.
pub fn ground_truth_varx(
    model: &ChainModel,
    spec: &SubstructureSpec,
    ts: f64,
) -> Result<VarxModel, ModelError> {
    if !(ts.is_finite() && ts > 0.0) {
        return Err(ModelError::InvalidSamplingPeriod(ts));
    }
    spec.validate_for(model)?;
    let q = spec.internal_count();
    let ts2 = ts * ts;
    let dofs = spec.internal_dofs();

    let mut a1 = DMatrix::zeros(q, q);
    for (r, &g) in dofs.iter().enumerate() {
        let m = model.mass(g);
        a1[(r, r)] = 2.0 - ts2 * (model.stiffness(g) + model.stiffness(g + 1)) / m;
        if r > 0 {
            a1[(r, r - 1)] = ts2 * model.stiffness(g) / m;
        }
        if r + 1 < q {
            a1[(r, r + 1)] = ts2 * model.stiffness(g + 1) / m;
        }
    }

    let i = spec.lower_interface;
    let top = spec.upper_interface;
    let mut b1 = DMatrix::zeros(q, 2);
    b1[(0, 0)] = ts2 * model.stiffness(i + 1) / model.mass(i + 1);
    b1[(q - 1, 1)] = ts2 * model.stiffness(top) / model.mass(top - 1);

    VarxModel::new(
        a1,
        -DMatrix::identity(q, q),
        b1,
        ts,
        dofs,
        spec.interface_dofs().to_vec(),
    )
}
