//! Derive the detection threshold from healthy runs with fine-grid
//! integration, then show the indicator spread per element.

use varx_shm::damage_analysis::{calibrate_threshold, damage_indicators};
use varx_shm::experiment_harness::identify;
use varx_shm::{ChainModel, Mode, SimConfig, SubstructureSpec};

fn main() {
    let chain = ChainModel::eight_story();
    let spec = SubstructureSpec::three_internal();
    let sim = |seed| Mode::Realistic.configure(&SimConfig { seed, ..SimConfig::default() });

    let (baseline, _) = identify(&chain, &spec, &sim(100), 8).unwrap();
    let runs: Vec<_> = (101..121)
        .map(|seed| {
            let (model, _) = identify(&chain, &spec, &sim(seed), 8).unwrap();
            damage_indicators(&model, &baseline).unwrap()
        })
        .collect();
    let threshold = calibrate_threshold(&runs).unwrap();

    println!("{:<8} {:>12} {:>12}", "element", "mean DI", "max DI");
    for element in runs[0].values.keys() {
        let values: Vec<f64> = runs.iter().map(|r| r.values[element]).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max = values.iter().cloned().fold(0.0, f64::max);
        println!("{:<8} {mean:>12.3e} {max:>12.3e}", element.to_string());
    }
    println!("threshold from {} healthy runs: {threshold:.3e}", runs.len());
}
