//! Localize a single damaged spring by comparing an estimated model with
//! a healthy baseline.

use varx_shm::experiment_harness::identify;
use varx_shm::{analyze, ChainModel, SimConfig, SubstructureSpec};

fn main() {
    let chain = ChainModel::eight_story();
    let spec = SubstructureSpec::three_internal();
    let sim = |seed| SimConfig { seed, ..SimConfig::default() };
    let (baseline, _) = identify(&chain, &spec, &sim(1), 8).unwrap();
    let threshold = 1e-6;

    for (spring, severity) in [(3, 0.05), (4, 0.10), (5, 0.20), (8, 0.20)] {
        let damaged = chain.with_damage(spring, severity).unwrap();
        let (current, _) = identify(&damaged, &spec, &sim(2), 8).unwrap();
        let report = analyze(&current, &baseline, threshold, &spec).unwrap();
        let above: Vec<String> = report
            .indicators
            .exceeding(threshold)
            .iter()
            .map(ToString::to_string)
            .collect();
        println!(
            "k{spring} -{:>2.0}%: {} spring={} severity={} above threshold: [{}]",
            severity * 100.0,
            report.verdict,
            report.localized_spring.map_or("-".into(), |s| s.to_string()),
            report.severity_estimate.map_or("-".into(), |s| format!("{s:.4}")),
            above.join(" ")
        );
    }
}
