//! Damage indicators from VARX coefficient variations, single-spring
//! localization and severity estimation.
//!
//! Indicators are computed on a stiffness transform `θ` of the tracked
//! coefficients: `2 - A1(r,r)` on the diagonal, the raw entry elsewhere.
//! Every `θ` is proportional to a spring stiffness (or a sum of two) over a
//! mass, so `DI = |θ - θ_healthy| / |θ_healthy|` reads as a relative
//! stiffness change.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::structure_model::{SubstructureSpec, VarxModel};

/// Baseline `θ` magnitudes at or below this are rejected.
pub const DEGENERATE_BASELINE: f64 = 1e-12;
/// Minimum number of healthy runs for threshold calibration.
pub const MIN_CALIBRATION_RUNS: usize = 10;
/// Lower bound on the calibrated threshold.
pub const THRESHOLD_FLOOR: f64 = 1e-6;
/// Standard deviations above the healthy mean.
pub const THRESHOLD_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DamageError {
    #[error("models are not comparable: {0}")]
    Incompatible(String),
    #[error("baseline value of {element} is {value:e}, too close to zero for a relative indicator")]
    BaselineDegenerate { element: Element, value: f64 },
    #[error("threshold calibration needs at least {MIN_CALIBRATION_RUNS} healthy runs, got {0}")]
    TooFewRuns(usize),
    #[error("spring {spring} is not inside substructure {spec}")]
    NotLocalized { spring: Spring, spec: SubstructureSpec },
    #[error("malformed element name `{0}`")]
    BadElement(String),
    #[error("malformed spring label `{0}`")]
    BadSpring(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CoefficientMatrix {
    A1,
    B1,
}

/// A coefficient position, 1-based, printed as `A1(1,2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element {
    pub matrix: CoefficientMatrix,
    pub row: usize,
    pub col: usize,
}

impl Element {
    pub const fn a1(row: usize, col: usize) -> Self {
        Self { matrix: CoefficientMatrix::A1, row, col }
    }

    pub const fn b1(row: usize, col: usize) -> Self {
        Self { matrix: CoefficientMatrix::B1, row, col }
    }

    fn value(&self, model: &VarxModel) -> f64 {
        let m = match self.matrix {
            CoefficientMatrix::A1 => &model.a1,
            CoefficientMatrix::B1 => &model.b1,
        };
        m[(self.row - 1, self.col - 1)]
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.matrix {
            CoefficientMatrix::A1 => "A1",
            CoefficientMatrix::B1 => "B1",
        };
        write!(f, "{name}({},{})", self.row, self.col)
    }
}

impl FromStr for Element {
    type Err = DamageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DamageError::BadElement(s.to_string());
        let (name, rest) = s.split_at_checked(2).ok_or_else(bad)?;
        let matrix = match name {
            "A1" => CoefficientMatrix::A1,
            "B1" => CoefficientMatrix::B1,
            _ => return Err(bad()),
        };
        let inner = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (row, col) = inner.split_once(',').ok_or_else(bad)?;
        let row = row.trim().parse().map_err(|_| bad())?;
        let col = col.trim().parse().map_err(|_| bad())?;
        if row == 0 || col == 0 {
            return Err(bad());
        }
        Ok(Self { matrix, row, col })
    }
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Global spring index, printed as `k4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Spring(pub usize);

impl fmt::Display for Spring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{}", self.0)
    }
}

impl FromStr for Spring {
    type Err = DamageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('k')
            .and_then(|n| n.parse().ok())
            .filter(|&n| n > 0)
            .map(Spring)
            .ok_or_else(|| DamageError::BadSpring(s.to_string()))
    }
}

impl Serialize for Spring {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Spring {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Coefficients whose analytic value depends on substructure stiffness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackedElements {
    pub a1_elements: Vec<Element>,
    pub b1_elements: Vec<Element>,
}

impl TrackedElements {
    /// Tridiagonal A1 positions (row-major) plus `B1(1,1)` and `B1(q,2)`.
    pub fn for_dimension(q: usize) -> Self {
        let mut a1_elements = Vec::new();
        for r in 1..=q {
            for c in r.saturating_sub(1).max(1)..=(r + 1).min(q) {
                a1_elements.push(Element::a1(r, c));
            }
        }
        let b1_elements = vec![Element::b1(1, 1), Element::b1(q, 2)];
        Self { a1_elements, b1_elements }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Element> {
        self.a1_elements.iter().chain(&self.b1_elements)
    }
}

/// `θ` for every tracked element of `model`.
pub fn stiffness_transform(model: &VarxModel) -> BTreeMap<Element, f64> {
    TrackedElements::for_dimension(model.dim())
        .iter()
        .map(|&e| {
            let raw = e.value(model);
            let theta = if e.matrix == CoefficientMatrix::A1 && e.row == e.col {
                2.0 - raw
            } else {
                raw
            };
            (e, theta)
        })
        .collect()
}

/// Short content digest identifying a model document.
pub fn model_id(model: &VarxModel) -> String {
    let doc = serde_json::to_vec(model).expect("model serializes");
    let digest = Sha256::digest(&doc);
    hex::encode(&digest[..8])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageIndicators {
    pub values: BTreeMap<Element, f64>,
    pub baseline_id: String,
}

impl DamageIndicators {
    pub fn max(&self) -> f64 {
        self.values.values().copied().fold(0.0, f64::max)
    }

    /// Tracked A1 elements whose indicator exceeds `threshold`.
    pub fn exceeding(&self, threshold: f64) -> BTreeSet<Element> {
        self.values
            .iter()
            .filter(|(e, di)| e.matrix == CoefficientMatrix::A1 && **di > threshold)
            .map(|(e, _)| *e)
            .collect()
    }
}

fn check_comparable(current: &VarxModel, baseline: &VarxModel) -> Result<(), DamageError> {
    if current.dim() != baseline.dim() {
        return Err(DamageError::Incompatible(format!(
            "dimension {} vs baseline {}",
            current.dim(),
            baseline.dim()
        )));
    }
    if (current.ts - baseline.ts).abs() > 1e-12 * baseline.ts {
        return Err(DamageError::Incompatible(format!(
            "sampling period {} vs baseline {}",
            current.ts, baseline.ts
        )));
    }
    if current.endogenous_labels != baseline.endogenous_labels
        || current.exogenous_labels != baseline.exogenous_labels
    {
        return Err(DamageError::Incompatible("channel labels differ".into()));
    }
    Ok(())
}

pub fn damage_indicators(
    current: &VarxModel,
    baseline: &VarxModel,
) -> Result<DamageIndicators, DamageError> {
    check_comparable(current, baseline)?;
    let now = stiffness_transform(current);
    let healthy = stiffness_transform(baseline);
    let mut values = BTreeMap::new();
    for (e, &reference) in &healthy {
        if !(reference.abs() > DEGENERATE_BASELINE) {
            return Err(DamageError::BaselineDegenerate { element: *e, value: reference });
        }
        values.insert(*e, (now[e] - reference).abs() / reference.abs());
    }
    Ok(DamageIndicators {
        values,
        baseline_id: model_id(baseline),
    })
}

/// Threshold `mean + 5 σ` of the healthy indicators, evaluated per tracked
/// element and maximised over elements, floored at [`THRESHOLD_FLOOR`].
///
/// Elements next to an interface carry estimation scatter orders of
/// magnitude above the central ones, so a single pooled distribution would
/// place the threshold inside the noisy elements' tail.
pub fn calibrate_threshold(healthy_runs: &[DamageIndicators]) -> Result<f64, DamageError> {
    if healthy_runs.len() < MIN_CALIBRATION_RUNS {
        return Err(DamageError::TooFewRuns(healthy_runs.len()));
    }
    let elements: BTreeSet<Element> = healthy_runs
        .iter()
        .flat_map(|run| run.values.keys().copied())
        .collect();
    let mut threshold = THRESHOLD_FLOOR;
    for e in &elements {
        let samples: Vec<f64> = healthy_runs
            .iter()
            .filter_map(|run| run.values.get(e).copied())
            .collect();
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        threshold = threshold.max(mean + THRESHOLD_SIGMAS * var.sqrt());
    }
    Ok(threshold)
}

/// A1 elements that change when spring `i + offset` changes, for a
/// substructure with `q` internal DOFs. `offset` runs from 1 to `q + 1`.
pub fn affected_elements(offset: usize, q: usize) -> BTreeSet<Element> {
    let mut set = BTreeSet::new();
    if offset == 0 || offset > q + 1 {
        return set;
    }
    // The spring sits between local rows offset-1 and offset.
    let below = offset - 1;
    let above = offset;
    if below >= 1 {
        set.insert(Element::a1(below, below));
    }
    if above <= q {
        set.insert(Element::a1(above, above));
    }
    if below >= 1 && above <= q {
        set.insert(Element::a1(below, above));
        set.insert(Element::a1(above, below));
    }
    set
}

/// Expected exceedance pattern for damage of `spring`, empty when the spring
/// lies outside the substructure.
pub fn expected_pattern(spec: &SubstructureSpec, spring: Spring) -> BTreeSet<Element> {
    if spec.contains_spring(spring.0) {
        affected_elements(spring.0 - spec.lower_interface, spec.internal_count())
    } else {
        BTreeSet::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Healthy,
    Damaged,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Healthy => "healthy",
            Verdict::Damaged => "damaged",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "healthy" => Ok(Verdict::Healthy),
            "damaged" => Ok(Verdict::Damaged),
            "inconclusive" => Ok(Verdict::Inconclusive),
            _ => Err(format!("unknown verdict `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageReport {
    pub verdict: Verdict,
    #[serde(rename = "spring")]
    pub localized_spring: Option<Spring>,
    #[serde(rename = "severity")]
    pub severity_estimate: Option<f64>,
    pub threshold: f64,
    pub indicators: DamageIndicators,
}

/// Matches the exceedance set against the single-spring pattern table.
pub fn localize(
    indicators: &DamageIndicators,
    threshold: f64,
    spec: &SubstructureSpec,
) -> DamageReport {
    let exceeded = indicators.exceeding(threshold);
    let q = spec.internal_count();
    let (verdict, localized_spring) = if exceeded.is_empty() {
        (Verdict::Healthy, None)
    } else {
        let matches: Vec<usize> = (1..=q + 1)
            .filter(|&offset| affected_elements(offset, q) == exceeded)
            .collect();
        match matches.as_slice() {
            [offset] => (
                Verdict::Damaged,
                Some(Spring(spec.lower_interface + offset)),
            ),
            // No match, or several springs sharing one pattern (q = 1).
            _ => (Verdict::Inconclusive, None),
        }
    };
    DamageReport {
        verdict,
        localized_spring,
        severity_estimate: None,
        threshold,
        indicators: indicators.clone(),
    }
}

/// Elements whose `θ` is proportional to the stiffness of `spring` alone.
pub fn proportional_elements(
    spec: &SubstructureSpec,
    spring: Spring,
) -> Result<Vec<Element>, DamageError> {
    if !spec.contains_spring(spring.0) {
        return Err(DamageError::NotLocalized { spring, spec: *spec });
    }
    let q = spec.internal_count();
    let offset = spring.0 - spec.lower_interface;
    Ok(if offset == 1 {
        vec![Element::b1(1, 1)]
    } else if offset == q + 1 {
        vec![Element::b1(q, 2)]
    } else {
        vec![Element::a1(offset - 1, offset), Element::a1(offset, offset - 1)]
    })
}

/// Fractional stiffness loss of `spring`, assuming unchanged masses.
pub fn estimate_severity(
    current: &VarxModel,
    baseline: &VarxModel,
    spring: Spring,
    spec: &SubstructureSpec,
) -> Result<f64, DamageError> {
    check_comparable(current, baseline)?;
    let elements = proportional_elements(spec, spring)?;
    let now = stiffness_transform(current);
    let healthy = stiffness_transform(baseline);
    let mut ratio = 0.0;
    for e in &elements {
        let reference = healthy[e];
        if !(reference.abs() > DEGENERATE_BASELINE) {
            return Err(DamageError::BaselineDegenerate { element: *e, value: reference });
        }
        ratio += now[e] / reference;
    }
    Ok(1.0 - ratio / elements.len() as f64)
}

/// Largest severity representable in a report.
const MAX_SEVERITY: f64 = 1.0 - f64::EPSILON;

/// Indicators, localization and (when localized) severity in one report.
pub fn analyze(
    current: &VarxModel,
    baseline: &VarxModel,
    threshold: f64,
    spec: &SubstructureSpec,
) -> Result<DamageReport, DamageError> {
    let indicators = damage_indicators(current, baseline)?;
    let mut report = localize(&indicators, threshold, spec);
    if let Some(spring) = report.localized_spring {
        let severity = estimate_severity(current, baseline, spring, spec)?;
        report.severity_estimate = Some(severity.clamp(0.0, MAX_SEVERITY));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure_model::{ground_truth_varx, ChainModel};

    fn truth(model: &ChainModel) -> VarxModel {
        ground_truth_varx(model, &SubstructureSpec::three_internal(), 1e-3).unwrap()
    }

    fn healthy() -> VarxModel {
        truth(&ChainModel::eight_story())
    }

    fn damaged(spring: usize, severity: f64) -> VarxModel {
        truth(&ChainModel::eight_story().with_damage(spring, severity).unwrap())
    }

    fn set(elements: &[Element]) -> BTreeSet<Element> {
        elements.iter().copied().collect()
    }

    #[test]
    fn tracked_elements_three_internal() {
        let t = TrackedElements::for_dimension(3);
        let names: Vec<String> = t.a1_elements.iter().map(|e| e.to_string()).collect();
        assert_eq!(
            names,
            ["A1(1,1)", "A1(1,2)", "A1(2,1)", "A1(2,2)", "A1(2,3)", "A1(3,2)", "A1(3,3)"]
        );
        assert_eq!(t.b1_elements, vec![Element::b1(1, 1), Element::b1(3, 2)]);
    }

    #[test]
    fn element_and_spring_names_parse() {
        for e in TrackedElements::for_dimension(4).iter() {
            assert_eq!(e.to_string().parse::<Element>().unwrap(), *e);
        }
        assert!("A2(1,1)".parse::<Element>().is_err());
        assert!("A1(0,1)".parse::<Element>().is_err());
        assert!("A1(1,1".parse::<Element>().is_err());
        assert_eq!("k4".parse::<Spring>().unwrap(), Spring(4));
        assert!("k0".parse::<Spring>().is_err());
        assert!("4".parse::<Spring>().is_err());
    }

    #[test]
    fn transform_of_healthy_truth() {
        let theta = stiffness_transform(&healthy());
        assert!((theta[&Element::a1(1, 1)] - 0.02).abs() < 1e-15);
        assert!((theta[&Element::a1(1, 2)] - 0.01).abs() < 1e-15);
        assert!((theta[&Element::b1(1, 1)] - 0.01).abs() < 1e-15);
        // θ(r,r) m / ts² recovers k_a + k_b.
        let sum = theta[&Element::a1(2, 2)] * 100.0 / 1e-6;
        assert!((sum - 2e6).abs() < 1e-6 * 2e6);
    }

    #[test]
    fn transform_cancels_constant() {
        let mut m = healthy();
        m.a1 = nalgebra::DMatrix::identity(3, 3) * 2.0;
        let theta = stiffness_transform(&m);
        for r in 1..=3 {
            assert_eq!(theta[&Element::a1(r, r)], 0.0);
        }
    }

    #[test]
    fn identical_models_give_zero_indicators() {
        let di = damage_indicators(&healthy(), &healthy()).unwrap();
        assert_eq!(di.values.len(), 9);
        assert!(di.values.values().all(|v| *v == 0.0));
        assert_eq!(di.baseline_id, model_id(&healthy()));
    }

    #[test]
    fn interior_spring_indicators() {
        let di = damage_indicators(&damaged(4, 0.05), &healthy()).unwrap();
        let v = |e: Element| di.values[&e];
        assert!((v(Element::a1(1, 2)) - 0.05).abs() < 1e-12);
        assert!((v(Element::a1(2, 1)) - 0.05).abs() < 1e-12);
        assert!((v(Element::a1(1, 1)) - 0.025).abs() < 1e-12);
        assert!((v(Element::a1(2, 2)) - 0.025).abs() < 1e-12);
        for e in [Element::a1(2, 3), Element::a1(3, 2), Element::a1(3, 3), Element::b1(1, 1), Element::b1(3, 2)] {
            assert_eq!(v(e), 0.0, "{e}");
        }
    }

    #[test]
    fn external_damage_leaves_theta_untouched() {
        let base = stiffness_transform(&healthy());
        for spring in [1, 2, 7, 8] {
            for severity in [0.05, 0.1, 0.2] {
                let theta = stiffness_transform(&damaged(spring, severity));
                for (e, v) in &theta {
                    assert_eq!(v.to_bits(), base[e].to_bits());
                }
            }
        }
    }

    #[test]
    fn degenerate_baseline_rejected() {
        let mut base = healthy();
        base.b1[(0, 0)] = 0.0;
        assert!(matches!(
            damage_indicators(&healthy(), &base),
            Err(DamageError::BaselineDegenerate { .. })
        ));
    }

    #[test]
    fn incompatible_models_rejected() {
        let small = ground_truth_varx(
            &ChainModel::eight_story(),
            &SubstructureSpec::new(2, 5).unwrap(),
            1e-3,
        )
        .unwrap();
        assert!(matches!(
            damage_indicators(&small, &healthy()),
            Err(DamageError::Incompatible(_))
        ));
    }

    fn indicators_from(values: &[f64]) -> DamageIndicators {
        let elements: Vec<Element> = TrackedElements::for_dimension(3).iter().copied().collect();
        DamageIndicators {
            values: elements.into_iter().zip(values.iter().copied()).collect(),
            baseline_id: "test".into(),
        }
    }

    #[test]
    fn threshold_floor_and_formula() {
        let zeros: Vec<_> = (0..10).map(|_| indicators_from(&[0.0; 9])).collect();
        assert_eq!(calibrate_threshold(&zeros).unwrap(), THRESHOLD_FLOOR);

        // Every element alternates 8e-6 and 1.2e-5 across runs: mean 1e-5, std 2e-6.
        let runs: Vec<_> = (0..10)
            .map(|r| indicators_from(&[if r % 2 == 0 { 8e-6 } else { 1.2e-5 }; 9]))
            .collect();
        let tau = calibrate_threshold(&runs).unwrap();
        assert!((tau - 2e-5).abs() < 1e-17, "tau {tau}");

        // One noisy element sets the threshold; quiet ones do not dilute it.
        let mixed: Vec<_> = (0..10)
            .map(|r| {
                let mut v = [1e-8; 9];
                v[1] = if r % 2 == 0 { 1e-3 } else { 3e-3 };
                indicators_from(&v)
            })
            .collect();
        let tau = calibrate_threshold(&mixed).unwrap();
        assert!((tau - 7e-3).abs() < 1e-15, "tau {tau}");

        assert_eq!(
            calibrate_threshold(&zeros[..3]),
            Err(DamageError::TooFewRuns(3))
        );
    }

    #[test]
    fn pattern_table_three_internal() {
        let spec = SubstructureSpec::three_internal();
        assert_eq!(expected_pattern(&spec, Spring(3)), set(&[Element::a1(1, 1)]));
        assert_eq!(
            expected_pattern(&spec, Spring(4)),
            set(&[Element::a1(1, 1), Element::a1(1, 2), Element::a1(2, 1), Element::a1(2, 2)])
        );
        assert_eq!(
            expected_pattern(&spec, Spring(5)),
            set(&[Element::a1(2, 2), Element::a1(2, 3), Element::a1(3, 2), Element::a1(3, 3)])
        );
        assert_eq!(expected_pattern(&spec, Spring(6)), set(&[Element::a1(3, 3)]));
        assert!(expected_pattern(&spec, Spring(1)).is_empty());
        assert!(expected_pattern(&spec, Spring(8)).is_empty());
    }

    fn indicators_with(exceeding: &[Element]) -> DamageIndicators {
        let mut di = indicators_from(&[0.0; 9]);
        for e in exceeding {
            di.values.insert(*e, 0.1);
        }
        di
    }

    #[test]
    fn localization_decisions() {
        let spec = SubstructureSpec::three_internal();
        let r = localize(&indicators_with(&[Element::a1(1, 1)]), 1e-3, &spec);
        assert_eq!((r.verdict, r.localized_spring), (Verdict::Damaged, Some(Spring(3))));

        let r = localize(&indicators_with(&[]), 1e-3, &spec);
        assert_eq!((r.verdict, r.localized_spring), (Verdict::Healthy, None));

        let r = localize(&indicators_with(&[Element::a1(1, 1), Element::a1(3, 3)]), 1e-3, &spec);
        assert_eq!((r.verdict, r.localized_spring), (Verdict::Inconclusive, None));

        // B1 exceedances alone do not localize.
        let r = localize(&indicators_with(&[Element::b1(1, 1)]), 1e-3, &spec);
        assert_eq!(r.verdict, Verdict::Healthy);
    }

    #[test]
    fn single_internal_dof_is_ambiguous() {
        let spec = SubstructureSpec::new(2, 4).unwrap();
        let mut di = DamageIndicators {
            values: TrackedElements::for_dimension(1).iter().map(|e| (*e, 0.0)).collect(),
            baseline_id: String::new(),
        };
        di.values.insert(Element::a1(1, 1), 0.1);
        assert_eq!(localize(&di, 1e-3, &spec).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn severity_on_truth_pairs() {
        let spec = SubstructureSpec::three_internal();
        let s = estimate_severity(&damaged(4, 0.1), &healthy(), Spring(4), &spec).unwrap();
        assert!((s - 0.1).abs() < 1e-12);
        let s = estimate_severity(&damaged(3, 0.2), &healthy(), Spring(3), &spec).unwrap();
        assert!((s - 0.2).abs() < 1e-12);
        let s = estimate_severity(&damaged(6, 0.05), &healthy(), Spring(6), &spec).unwrap();
        assert!((s - 0.05).abs() < 1e-12);
        assert_eq!(
            estimate_severity(&healthy(), &healthy(), Spring(5), &spec).unwrap(),
            0.0
        );
        assert!(matches!(
            estimate_severity(&healthy(), &healthy(), Spring(8), &spec),
            Err(DamageError::NotLocalized { .. })
        ));
    }

    #[test]
    fn analyze_truth_pairs_for_every_internal_spring() {
        let spec = SubstructureSpec::three_internal();
        for spring in 3..=6 {
            for severity in [0.05, 0.10, 0.20] {
                let r = analyze(&damaged(spring, severity), &healthy(), 1e-6, &spec).unwrap();
                assert_eq!(r.verdict, Verdict::Damaged);
                assert_eq!(r.localized_spring, Some(Spring(spring)));
                assert!((r.severity_estimate.unwrap() - severity).abs() < 1e-12);
                assert_eq!(
                    r.indicators.exceeding(1e-6),
                    expected_pattern(&spec, Spring(spring))
                );
            }
        }
        for spring in [1, 8] {
            let r = analyze(&damaged(spring, 0.2), &healthy(), 1e-6, &spec).unwrap();
            assert_eq!(r.verdict, Verdict::Healthy);
            assert_eq!(r.severity_estimate, None);
        }
    }

    #[test]
    fn report_document_shape() {
        let spec = SubstructureSpec::three_internal();
        let r = analyze(&damaged(4, 0.1), &healthy(), 1e-6, &spec).unwrap();
        let json: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(json["verdict"], "damaged");
        assert_eq!(json["spring"], "k4");
        assert!(json["indicators"]["values"]["A1(1,2)"].is_f64());
        assert!(json["indicators"]["values"]["B1(1,1)"].is_f64());
        let back: DamageReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }
}
