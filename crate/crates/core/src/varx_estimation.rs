//! Multivariable least-squares identification of the substructure VARX
//! model with two endogenous lags and one exogenous lag.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulator::DisplacementRecord;
use crate::structure_model::{ModelError, VarxModel};

/// Smallest singular value accepted, relative to the largest.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("{samples} samples give {usable} regression columns, fewer than the {unknowns} unknowns per row")]
    TooFewSamples {
        samples: usize,
        usable: usize,
        unknowns: usize,
    },
    #[error("channel mismatch: {0}")]
    ChannelCountMismatch(String),
    #[error("regressors are rank deficient (singular value ratio {ratio:e} below {RANK_TOLERANCE:e}); the excitation is insufficient")]
    RankDeficient { ratio: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Stacked targets `z(n)` and regressors `[z(n-1); z(n-2); u(n-1)]`, one
/// column per usable time index.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub q: usize,
    pub t_usable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationDiagnostics {
    /// Per-channel RMS of the one-step prediction error (m).
    pub residual_rms: Vec<f64>,
    /// Condition number of the regressor Gram matrix `X X^T`.
    pub condition_indicator: f64,
    pub samples_used: usize,
}

pub fn assemble_regression(
    endog: &DisplacementRecord,
    exog: &DisplacementRecord,
) -> Result<RegressionProblem, EstimationError> {
    if exog.channels() != 2 {
        return Err(EstimationError::ChannelCountMismatch(format!(
            "expected 2 exogenous channels, got {}",
            exog.channels()
        )));
    }
    if endog.channels() == 0 {
        return Err(EstimationError::ChannelCountMismatch(
            "no endogenous channels".into(),
        ));
    }
    if endog.samples() != exog.samples() {
        return Err(EstimationError::ChannelCountMismatch(format!(
            "endogenous record has {} samples, exogenous {}",
            endog.samples(),
            exog.samples()
        )));
    }
    if endog.dt != exog.dt {
        return Err(EstimationError::ChannelCountMismatch(format!(
            "sample periods differ ({} vs {})",
            endog.dt, exog.dt
        )));
    }
    let q = endog.channels();
    let p = 2 * q + 2;
    let samples = endog.samples();
    let usable = samples.saturating_sub(2);
    if usable < p {
        return Err(EstimationError::TooFewSamples {
            samples,
            usable,
            unknowns: p,
        });
    }

    let z = &endog.data;
    let u = &exog.data;
    let y = DMatrix::from_fn(q, usable, |r, t| z[(t + 2, r)]);
    let x = DMatrix::from_fn(p, usable, |r, t| {
        if r < q {
            z[(t + 1, r)]
        } else if r < 2 * q {
            z[(t, r - q)]
        } else {
            u[(t + 1, r - 2 * q)]
        }
    });
    Ok(RegressionProblem {
        y,
        x,
        q,
        t_usable: usable,
    })
}

/// Least-squares coefficient block `B` minimising `||Y - B X||_F`, via
/// Householder QR of `X^T`. Also returns the singular values of `X`.
fn solve_block(problem: &RegressionProblem) -> Result<(DMatrix<f64>, DVector<f64>), EstimationError> {
    let p = problem.x.nrows();
    let qr = problem.x.transpose().qr();
    let r = qr.r();
    let singular = triangular_singular_values(&r);
    let largest = singular.max();
    let smallest = singular.min();
    if !(largest > 0.0) || smallest <= RANK_TOLERANCE * largest {
        let ratio = if largest > 0.0 { smallest / largest } else { 0.0 };
        return Err(EstimationError::RankDeficient { ratio });
    }
    let mut rhs = problem.y.transpose();
    qr.q_tr_mul(&mut rhs);
    let head = rhs.rows(0, p).into_owned();
    let coefficients = r
        .solve_upper_triangular(&head)
        .ok_or(EstimationError::RankDeficient { ratio: 0.0 })?;
    Ok((coefficients.transpose(), singular))
}

fn triangular_singular_values(r: &DMatrix<f64>) -> DVector<f64> {
    r.clone().svd(false, false).singular_values
}

fn gram_condition(singular: &DVector<f64>) -> f64 {
    let ratio = singular.max() / singular.min();
    ratio * ratio
}

fn split_block(
    block: &DMatrix<f64>,
    q: usize,
    ts: f64,
    endogenous_labels: Vec<usize>,
    exogenous_labels: Vec<usize>,
) -> Result<VarxModel, EstimationError> {
    Ok(VarxModel::new(
        block.columns(0, q).into_owned(),
        block.columns(q, q).into_owned(),
        block.columns(2 * q, 2).into_owned(),
        ts,
        endogenous_labels,
        exogenous_labels,
    )?)
}

fn residual_rms(model: &VarxModel, problem: &RegressionProblem) -> Vec<f64> {
    let q = problem.q;
    let pred = &model.a1 * problem.x.rows(0, q)
        + &model.a2 * problem.x.rows(q, q)
        + &model.b1 * problem.x.rows(2 * q, 2);
    let resid = &problem.y - pred;
    let t = problem.t_usable as f64;
    resid
        .row_iter()
        .map(|row| (row.norm_squared() / t).sqrt())
        .collect()
}

/// Multivariable least-squares estimate of `[A1 A2 B1]`.
pub fn mls_estimate(
    problem: &RegressionProblem,
    ts: f64,
    endogenous_labels: Vec<usize>,
    exogenous_labels: Vec<usize>,
) -> Result<(VarxModel, EstimationDiagnostics), EstimationError> {
    let (block, singular) = solve_block(problem)?;
    let model = split_block(&block, problem.q, ts, endogenous_labels, exogenous_labels)?;
    let diagnostics = EstimationDiagnostics {
        residual_rms: residual_rms(&model, problem),
        condition_indicator: gram_condition(&singular),
        samples_used: problem.t_usable,
    };
    Ok((model, diagnostics))
}

/// Convenience wrapper: regression assembly plus estimation, labels taken
/// from the records.
pub fn estimate_from_records(
    endog: &DisplacementRecord,
    exog: &DisplacementRecord,
) -> Result<(VarxModel, EstimationDiagnostics), EstimationError> {
    let problem = assemble_regression(endog, exog)?;
    mls_estimate(
        &problem,
        endog.dt,
        endog.dof_labels.clone(),
        exog.dof_labels.clone(),
    )
}

/// `A1 z(n-1) + A2 z(n-2) + B1 u(n-1)`.
pub fn predict_one_step(
    model: &VarxModel,
    z_prev: &DVector<f64>,
    z_prev2: &DVector<f64>,
    u_prev: &DVector<f64>,
) -> Result<DVector<f64>, EstimationError> {
    let q = model.dim();
    if z_prev.len() != q || z_prev2.len() != q || u_prev.len() != 2 {
        return Err(EstimationError::DimensionMismatch(format!(
            "expected lengths ({q}, {q}, 2), got ({}, {}, {})",
            z_prev.len(),
            z_prev2.len(),
            u_prev.len()
        )));
    }
    Ok(&model.a1 * z_prev + &model.a2 * z_prev2 + &model.b1 * u_prev)
}

/// One-step prediction residual statistics of `model` over the records.
pub fn residual_stats(
    model: &VarxModel,
    endog: &DisplacementRecord,
    exog: &DisplacementRecord,
) -> Result<EstimationDiagnostics, EstimationError> {
    if endog.channels() != model.dim() {
        return Err(EstimationError::DimensionMismatch(format!(
            "model has {} endogenous channels, record has {}",
            model.dim(),
            endog.channels()
        )));
    }
    if (endog.dt - model.ts).abs() > 1e-12 * model.ts {
        return Err(EstimationError::DimensionMismatch(format!(
            "record period {} differs from model period {}",
            endog.dt, model.ts
        )));
    }
    let problem = assemble_regression(endog, exog)?;
    let singular = triangular_singular_values(&problem.x.transpose().qr().r());
    Ok(EstimationDiagnostics {
        residual_rms: residual_rms(model, &problem),
        condition_indicator: gram_condition(&singular),
        samples_used: problem.t_usable,
    })
}
