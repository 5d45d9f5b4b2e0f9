//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use varx_shm::damage_analysis::{
    analyze, damage_indicators, estimate_severity, expected_pattern, proportional_elements,
    stiffness_transform, Spring,
};
use varx_shm::experiment_harness::{
    emit_report, identify, paper_suite, run_suite, Mode, ReportFormat, DEFAULT_CALIBRATION_SEEDS,
};
use varx_shm::simulator::{
    check_stability, extract_substructure_signals, generate_excitation, simulate, SimConfig,
    SimError,
};
use varx_shm::structure_model::{ground_truth_varx, ChainModel, SubstructureSpec, VarxModel};
use varx_shm::varx_estimation::{estimate_from_records, mls_estimate, RegressionProblem};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEVERITIES: [f64; 3] = [0.05, 0.10, 0.20];
const INTERNAL_SPRINGS: [usize; 4] = [3, 4, 5, 6];

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn eight_story_setup() -> (ChainModel, SubstructureSpec, SimConfig) {
    (
        ChainModel::eight_story(),
        SubstructureSpec::three_internal(),
        SimConfig::default(),
    )
}

fn criterion_1() -> Outcome {
    let (chain, spec, sim) = eight_story_setup();
    let truth = ground_truth_varx(&chain, &spec, sim.ts).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for r in 0..3usize {
        for c in 0..3 {
            let a1 = match r.abs_diff(c) {
                0 => 1.98,
                1 => 0.01,
                _ => 0.0,
            };
            let a2 = if r == c { -1.0 } else { 0.0 };
            worst = worst.max(rel(truth.a1[(r, c)], a1)).max(rel(truth.a2[(r, c)], a2));
        }
        for c in 0..2 {
            let b1 = if (r, c) == (0, 0) || (r, c) == (2, 1) { 0.01 } else { 0.0 };
            worst = worst.max(rel(truth.b1[(r, c)], b1));
        }
    }
    if worst <= 1e-15 {
        Ok(format!("max relative error {worst:.2e}"))
    } else {
        Err(format!("max relative error {worst:.2e} > 1e-15"))
    }
}

fn criterion_2() -> Outcome {
    let (chain, spec, sim) = eight_story_setup();
    let truth = ground_truth_varx(&chain, &spec, sim.ts).map_err(|e| e.to_string())?;
    let (est, _) = identify(&chain, &spec, &sim, 8).map_err(|e| e.to_string())?;
    let mut worst_rel: f64 = 0.0;
    for r in 0..3usize {
        for c in 0..3 {
            if r.abs_diff(c) <= 1 {
                worst_rel = worst_rel.max(rel(est.a1[(r, c)], truth.a1[(r, c)]));
            }
        }
    }
    worst_rel = worst_rel
        .max(rel(est.b1[(0, 0)], truth.b1[(0, 0)]))
        .max(rel(est.b1[(2, 1)], truth.b1[(2, 1)]));
    let structural_zeros = [
        est.b1[(0, 1)].abs(),
        est.b1[(1, 0)].abs(),
        est.b1[(1, 1)].abs(),
        est.b1[(2, 0)].abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let a2_err = max_abs(&(&est.a2 + DMatrix::identity(3, 3)));
    let corner = est.a1[(0, 2)].abs().max(est.a1[(2, 0)].abs());
    let summary = format!(
        "A1/B1 rel {worst_rel:.2e}, B1 zeros {structural_zeros:.2e}, |A2+I| {a2_err:.2e}, corners {corner:.2e}"
    );
    if worst_rel <= 1e-8 && structural_zeros <= 1e-8 && a2_err <= 1e-8 && corner <= 1e-8 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn normal_equations(problem: &RegressionProblem) -> Option<DMatrix<f64>> {
    let x = &problem.x;
    let gram = x * x.transpose();
    let rhs = &problem.y * x.transpose();
    let inv = gram.try_inverse()?;
    Some(rhs * inv)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let q = rng.random_range(1..=3usize);
        let p = 2 * q + 2;
        let t = rng.random_range(p + 5..=100usize);
        let x = DMatrix::from_fn(p, t, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(q, t, |_, _| rng.random_range(-1.0..1.0));
        let problem = RegressionProblem { y, x, q, t_usable: t };
        let (model, _) = mls_estimate(&problem, 1e-3, (1..=q).collect(), vec![0, q + 1])
            .map_err(|e| e.to_string())?;
        let qr_block = model.coefficient_block();
        let ne_block = normal_equations(&problem).ok_or("singular Gram matrix")?;
        worst = worst.max(max_abs(&(&qr_block - &ne_block)) / max_abs(&ne_block));
    }
    if worst <= 1e-10 {
        Ok(format!("20 instances, max relative difference {worst:.2e}"))
    } else {
        Err(format!("max relative difference {worst:.2e} > 1e-10"))
    }
}

fn suite_criterion(mode: Mode) -> Outcome {
    let start = Instant::now();
    let result = run_suite(&paper_suite(42, mode), DEFAULT_CALIBRATION_SEEDS)
        .map_err(|e| e.to_string())?;
    let worst_severity = result
        .rows
        .iter()
        .filter_map(|r| Some((r.report.severity_estimate? - r.expected.severity?).abs()))
        .fold(0.0, f64::max);
    let failed: Vec<String> = result
        .rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} ({})", r.scenario, r.report.verdict))
        .collect();
    let summary = format!(
        "{}/{} rows, threshold {:.3e}, worst severity error {worst_severity:.2e}, {:.1} s",
        result.passed(),
        result.rows.len(),
        result.metadata.threshold.unwrap_or(f64::NAN),
        start.elapsed().as_secs_f64()
    );
    if result.rows.len() == 19 && failed.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; failing: {}", failed.join(", ")))
    }
}

fn estimate_with_force_scale(scale: f64) -> Result<VarxModel, String> {
    let (chain, spec, sim) = eight_story_setup();
    let force = generate_excitation(&sim, 8).map_err(|e| e.to_string())?.scaled(scale);
    let record = simulate(&chain, &force, &sim).map_err(|e| e.to_string())?;
    let (endog, exog) = extract_substructure_signals(&record, &spec).map_err(|e| e.to_string())?;
    Ok(estimate_from_records(&endog, &exog).map_err(|e| e.to_string())?.0)
}

fn property_a() -> Result<String, String> {
    let reference = estimate_with_force_scale(1.0)?.coefficient_block();
    let mut worst: f64 = 0.0;
    for scale in [1e-3, 7.5, 1e4] {
        let block = estimate_with_force_scale(scale)?.coefficient_block();
        worst = worst.max(max_abs(&(&block - &reference)) / max_abs(&reference));
    }
    if worst <= 1e-12 {
        Ok(format!("(a) scaling {worst:.1e}"))
    } else {
        Err(format!("(a) force scaling changed the estimate by {worst:.2e}"))
    }
}

fn property_b() -> Result<String, String> {
    let (chain, spec, sim) = eight_story_setup();
    let (baseline, _) = identify(&chain, &spec, &sim, 8).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for spring in INTERNAL_SPRINGS {
        let mut driven = expected_pattern(&spec, Spring(spring));
        driven.extend(proportional_elements(&spec, Spring(spring)).map_err(|e| e.to_string())?);
        let mut previous: Option<std::collections::BTreeMap<_, f64>> = None;
        for severity in SEVERITIES {
            let damaged = chain.with_damage(spring, severity).map_err(|e| e.to_string())?;
            let (model, _) = identify(&damaged, &spec, &sim, 8).map_err(|e| e.to_string())?;
            let di = damage_indicators(&model, &baseline).map_err(|e| e.to_string())?;
            if let Some(prev) = &previous {
                for e in &driven {
                    if di.values[e] <= prev[e] {
                        return Err(format!("(b) DI {e} not increasing for k{spring} at {severity}"));
                    }
                    checked += 1;
                }
            }
            previous = Some(di.values);
        }
    }
    Ok(format!("(b) {checked} monotone steps"))
}

fn property_c() -> Result<String, String> {
    let (chain, spec, sim) = eight_story_setup();
    let healthy = stiffness_transform(
        &ground_truth_varx(&chain, &spec, sim.ts).map_err(|e| e.to_string())?,
    );
    for spring in [1, 2, 7, 8] {
        for severity in SEVERITIES {
            let damaged = chain.with_damage(spring, severity).map_err(|e| e.to_string())?;
            let theta = stiffness_transform(
                &ground_truth_varx(&damaged, &spec, sim.ts).map_err(|e| e.to_string())?,
            );
            let identical = theta
                .iter()
                .all(|(e, v)| v.to_bits() == healthy[e].to_bits());
            if !identical {
                return Err(format!("(c) theta changed under external damage k{spring}"));
            }
        }
    }
    Ok("(c) external theta bit-identical".into())
}

fn property_d() -> Result<String, String> {
    let (chain, spec, sim) = eight_story_setup();
    let healthy = ground_truth_varx(&chain, &spec, sim.ts).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for spring in INTERNAL_SPRINGS {
        for severity in SEVERITIES {
            let damaged = chain.with_damage(spring, severity).map_err(|e| e.to_string())?;
            let truth = ground_truth_varx(&damaged, &spec, sim.ts).map_err(|e| e.to_string())?;
            let estimate = estimate_severity(&truth, &healthy, Spring(spring), &spec)
                .map_err(|e| e.to_string())?;
            worst = worst.max((estimate - severity).abs());
            let report = analyze(&truth, &healthy, 1e-6, &spec).map_err(|e| e.to_string())?;
            if report.localized_spring != Some(Spring(spring)) {
                return Err(format!("(d) truth pair k{spring} localized as {:?}", report.localized_spring));
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("(d) severity {worst:.1e}"))
    } else {
        Err(format!("(d) truth-pair severity error {worst:.2e} > 1e-12"))
    }
}

fn property_e() -> Result<String, String> {
    let run = || {
        run_suite(&paper_suite(42, Mode::Exact), DEFAULT_CALIBRATION_SEEDS)
            .map(|r| emit_report(&r, ReportFormat::Structured))
            .map_err(|e| e.to_string())
    };
    if run()? == run()? {
        Ok("(e) reports byte-identical".into())
    } else {
        Err("(e) repeated suite produced different reports".into())
    }
}

fn criterion_6() -> Outcome {
    let parts = [property_a, property_b, property_c, property_d, property_e];
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for part in parts {
        match part() {
            Ok(n) => notes.push(n),
            Err(e) => failures.push(e),
        }
    }
    if failures.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_7() -> Outcome {
    let chain = ChainModel::eight_story();
    let coarse = SimConfig { ts: 1e-2, ..SimConfig::default() };
    let rejected = match check_stability(&chain, &coarse) {
        Err(SimError::StabilityViolation { bound, .. }) if rel(bound, 200.0) <= 1e-12 => true,
        Err(e) => return Err(format!("ts=1e-2 gave unexpected error: {e}")),
        Ok(()) => false,
    };
    let accepted = check_stability(&chain, &SimConfig::default()).is_ok();
    match (rejected, accepted) {
        (true, true) => Ok("ts=1e-2 rejected (bound 200 rad/s), ts=1e-3 accepted".into()),
        _ => Err(format!("ts=1e-2 rejected: {rejected}, ts=1e-3 accepted: {accepted}")),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("ground-truth construction", criterion_1),
        ("same-grid identification round trip", criterion_2),
        ("estimator oracle vs normal equations", criterion_3),
        ("scenario grid, exact mode", || suite_criterion(Mode::Exact)),
        ("scenario grid, realistic mode", || suite_criterion(Mode::Realistic)),
        ("property suite", criterion_6),
        ("stability guard", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
