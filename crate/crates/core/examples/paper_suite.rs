//! Run the full 19-scenario grid and print the result table.
//!
//! ```text
//! cargo run --release --example paper_suite -- realistic
//! ```

use varx_shm::experiment_harness::{emit_report, ReportFormat, DEFAULT_CALIBRATION_SEEDS};
use varx_shm::{paper_suite, run_suite, Mode};

fn main() {
    let mode: Mode = std::env::args()
        .nth(1)
        .map(|m| m.parse().expect("exact or realistic"))
        .unwrap_or(Mode::Exact);
    let scenarios = paper_suite(42, mode);
    let result = run_suite(&scenarios, DEFAULT_CALIBRATION_SEEDS).unwrap();
    print!("{}", emit_report(&result, ReportFormat::Table));
    println!(
        "{mode}: {}/{} passed, threshold {:.3e}, digest {}",
        result.passed(),
        result.rows.len(),
        result.metadata.threshold.unwrap(),
        &result.metadata.config_digest[..16]
    );
}
