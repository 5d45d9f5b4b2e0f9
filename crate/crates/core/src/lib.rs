//! Substructure-level structural health monitoring for shear-building
//! chains.
//!
//! A substructure bounded by two measured interface DOFs obeys a VARX model
//! whose coefficients are simple functions of the enclosed masses and
//! springs. Estimating that model from displacements alone and comparing it
//! with a healthy baseline reveals whether the substructure is damaged, which
//! spring lost stiffness, and by how much.
//!
//! | module | role |
//! |--------|------|
//! | [`structure_model`] | chain, substructure partition, analytic VARX matrices |
//! | [`simulator`] | white-noise excitation, central-difference integration, CSV records |
//! | [`varx_estimation`] | multivariable least squares, residual diagnostics |
//! | [`damage_analysis`] | damage indicators, threshold, localization, severity |
//! | [`experiment_harness`] | scenario grid, suite execution, reports |
//! | [`cli`] | `varx-shm` command-line entry point |
//!
//! Runnable walkthroughs live in `examples/`.

pub mod cli;
pub mod damage_analysis;
pub mod experiment_harness;
pub mod simulator;
pub mod structure_model;
pub mod varx_estimation;

pub use damage_analysis::{analyze, DamageReport, Spring, Verdict};
pub use experiment_harness::{paper_suite, run_suite, Mode};
pub use simulator::{generate_excitation, simulate, DisplacementRecord, SimConfig};
pub use structure_model::{ground_truth_varx, ChainModel, SubstructureSpec, VarxModel};
pub use varx_estimation::{estimate_from_records, mls_estimate};
