//! JSON wire formats for spaces, measures, and plans.
//!
//! Parsing always routes through the validating constructors, so a file that
//! deserializes but encodes a broken metric or an unbalanced measure still
//! fails loudly.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::measure::DiscreteMeasure;
use crate::plan::{PlanEntry, TransportPlan};
use crate::space::MetricSpace;

#[derive(Debug, Serialize, Deserialize)]
pub struct SpaceJson {
    pub n: usize,
    pub dist: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MeasureJson {
    pub weights: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlanJson {
    /// Triples (source index, target index, mass).
    pub entries: Vec<(usize, usize, f64)>,
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| CoreError::Parse(format!("bad {} json: {}", what, e)))
}

pub fn parse_space(text: &str, tol: f64) -> Result<MetricSpace> {
    let raw: SpaceJson = parse(text, "space")?;
    if raw.dist.len() != raw.n {
        return Err(CoreError::Parse(format!(
            "space declares n = {} but the matrix has {} rows",
            raw.n,
            raw.dist.len()
        )));
    }
    MetricSpace::new(raw.dist, raw.labels, tol)
}

pub fn render_space(space: &MetricSpace) -> String {
    let doc = SpaceJson {
        n: space.len(),
        dist: space.matrix().to_vec(),
        labels: space.labels().map(|l| l.to_vec()),
    };
    serde_json::to_string_pretty(&doc).expect("space serializes")
}

pub fn parse_measure(text: &str, tol: f64) -> Result<DiscreteMeasure> {
    let raw: MeasureJson = parse(text, "measure")?;
    DiscreteMeasure::new(raw.weights, raw.total, tol)
}

pub fn render_measure(m: &DiscreteMeasure) -> String {
    let doc = MeasureJson { weights: m.weights().to_vec(), total: m.total() };
    serde_json::to_string_pretty(&doc).expect("measure serializes")
}

/// Plans carry no size of their own on the wire; the ambient point count
/// comes from the instance they belong to.
pub fn parse_plan(text: &str, n: usize) -> Result<TransportPlan> {
    let raw: PlanJson = parse(text, "plan")?;
    let entries = raw
        .entries
        .into_iter()
        .map(|(row, col, mass)| PlanEntry { row, col, mass })
        .collect();
    TransportPlan::from_entries(n, entries)
}

pub fn render_plan(plan: &TransportPlan) -> String {
    let doc = PlanJson {
        entries: plan
            .entries()
            .iter()
            .map(|e| (e.row, e.col, e.mass))
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("plan serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::space_from_points_1d;

    #[test]
    fn space_round_trip_preserves_matrix_and_labels() {
        let s = MetricSpace::new(
            vec![
                vec![0.0, 1.0, 2.0],
                vec![1.0, 0.0, 1.0],
                vec![2.0, 1.0, 0.0],
            ],
            Some(vec!["a".into(), "b".into(), "c".into()]),
            1e-9,
        )
        .unwrap();
        let back = parse_space(&render_space(&s), 1e-9).unwrap();
        assert_eq!(back.matrix(), s.matrix());
        assert_eq!(back.labels(), s.labels());
    }

    #[test]
    fn measure_round_trip() {
        let m = DiscreteMeasure::probability(vec![0.25, 0.75], 1e-9).unwrap();
        let back = parse_measure(&render_measure(&m), 1e-9).unwrap();
        assert_eq!(back.weights(), m.weights());
        assert_eq!(back.total(), m.total());
    }

    #[test]
    fn plan_round_trip() {
        let mu = DiscreteMeasure::probability(vec![0.5, 0.5], 1e-9).unwrap();
        let plan = TransportPlan::identity(&mu);
        let back = parse_plan(&render_plan(&plan), 2).unwrap();
        assert_eq!(back.entries().len(), plan.entries().len());
        for (a, b) in back.entries().iter().zip(plan.entries()) {
            assert_eq!((a.row, a.col), (b.row, b.col));
            assert_eq!(a.mass, b.mass);
        }
    }

    #[test]
    fn corrupted_documents_are_parse_errors() {
        assert!(matches!(
            parse_space("{not json", 1e-9),
            Err(CoreError::Parse(_))
        ));
        assert!(matches!(
            parse_measure("{\"weights\": [0.5], \"total\": \"x\"}", 1e-9),
            Err(CoreError::Parse(_))
        ));
        assert!(matches!(
            parse_plan("{}", 2),
            Err(CoreError::Parse(_))
        ));
    }

    #[test]
    fn invalid_contents_still_rejected() {
        // well-formed json, broken metric (asymmetric)
        let bad = r#"{"n": 2, "dist": [[0.0, 1.0], [2.0, 0.0]]}"#;
        assert!(parse_space(bad, 1e-9).is_err());
        // unbalanced measure
        let badm = r#"{"weights": [0.5, 0.2], "total": 1.0}"#;
        assert!(parse_measure(badm, 1e-9).is_err());
        // plan entry out of range
        let badp = r#"{"entries": [[0, 5, 0.5]]}"#;
        assert!(parse_plan(badp, 2).is_err());
        // size mismatch between n and matrix
        let badn = r#"{"n": 3, "dist": [[0.0, 1.0], [1.0, 0.0]]}"#;
        assert!(parse_space(badn, 1e-9).is_err());
        let s = space_from_points_1d(&[0.0, 1.0]).unwrap();
        assert_eq!(parse_space(&render_space(&s), 1e-9).unwrap().len(), 2);
    }
}
