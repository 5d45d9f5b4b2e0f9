//! Estimate the substructure VARX model from simulated interface and
//! internal displacements and compare it with the analytic matrices.

use varx_shm::simulator::extract_substructure_signals;
use varx_shm::varx_estimation::residual_stats;
use varx_shm::{
    estimate_from_records, generate_excitation, ground_truth_varx, simulate, ChainModel, SimConfig,
    SubstructureSpec,
};

fn main() {
    let chain = ChainModel::eight_story();
    let spec = SubstructureSpec::three_internal();
    let truth = ground_truth_varx(&chain, &spec, 1e-3).unwrap();

    for substeps in [1, 10] {
        let config = SimConfig {
            substep_ratio: substeps,
            ..SimConfig::default()
        };
        let force = generate_excitation(&config, 8).unwrap();
        let record = simulate(&chain, &force, &config).unwrap();
        let (endog, exog) = extract_substructure_signals(&record, &spec).unwrap();
        let (model, diag) = estimate_from_records(&endog, &exog).unwrap();

        let error = (model.coefficient_block() - truth.coefficient_block()).abs().max();
        let truth_fit = residual_stats(&truth, &endog, &exog).unwrap();
        println!("substep ratio {substeps}:");
        println!("  max |estimate - truth| = {error:.3e}");
        let rms = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ");
        println!("  residual RMS [{}], truth residual RMS [{}]", rms(&diag.residual_rms), rms(&truth_fit.residual_rms));
        println!("  condition indicator {:.3e}, {} samples", diag.condition_indicator, diag.samples_used);
        println!("  A1 = {:.6}", model.a1);
    }
}
