//! Confusion-matrix scores with flood (label 1) as the positive class.
//!
//! Ratios with a zero denominator are `None` rather than being coerced to 0
//! or 1, and serialise as JSON `null`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{check_width, Dataset};
use crate::error::{Error, Result};
use crate::models::BlackBoxModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The same matrix with no-flood taken as the positive class.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }
}

pub fn confusion(predictions: &[u8], truth: &[u8]) -> Result<ConfusionMatrix> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("no prediction/label pairs".into()));
    }
    let mut m = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (1, 1) => m.tp += 1,
            (1, 0) => m.fp += 1,
            (0, 0) => m.tn += 1,
            (0, 1) => m.fn_ += 1,
            _ => return Err(Error::InvalidLabel(p.max(t))),
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn score(m: &ConfusionMatrix) -> Scores {
    let precision = ratio(m.tp, m.tp + m.fp);
    let recall = ratio(m.tp, m.tp + m.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Scores {
        accuracy: ratio(m.tp + m.tn, m.total()),
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    /// Which partition was scored, `"test"` or `"train"`.
    pub partition: String,
    #[serde(flatten)]
    pub scores: Scores,
    pub matrix: ConfusionMatrix,
}

/// Threshold every row of `data` at probability 0.5 and score the result.
pub fn evaluate<M: BlackBoxModel + ?Sized>(
    model: &M,
    name: &str,
    data: &Dataset,
    partition: &str,
) -> Result<MetricsReport> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation set".into()));
    }
    let x = data.features()?;
    let width = model.n_features();
    let mut predictions = Vec::with_capacity(x.len());
    for row in &x {
        check_width(row, width)?;
        predictions.push(model.predict(row));
    }
    let matrix = confusion(&predictions, &data.labels())?;
    Ok(MetricsReport {
        model: name.to_string(),
        partition: partition.to_string(),
        scores: score(&matrix),
        matrix,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

/// Aligned table in the column order Model, Accuracy, Precision, Recall,
/// F1-score.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let header = ["Model", "Accuracy", "Precision", "Recall", "F1-score"];
    let rows: Vec<[String; 5]> = reports
        .iter()
        .map(|r| {
            let name = if r.partition == "test" {
                r.model.clone()
            } else {
                format!("{} [{}]", r.model, r.partition)
            };
            [
                name,
                cell(r.scores.accuracy),
                cell(r.scores.precision),
                cell(r.scores.recall),
                cell(r.scores.f1),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{c:<w$}");
            } else {
                let _ = write!(out, "  {c:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, &header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut out, &rule.iter().map(String::as_str).collect::<Vec<_>>());
    for row in &rows {
        line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{RainfallRecord, MONTHS};
    use crate::models::FnModel;
    use proptest::prelude::*;

    #[test]
    fn all_positive() {
        let m = confusion(&[1; 7], &[1; 7]).unwrap();
        assert_eq!(m, ConfusionMatrix { tp: 7, fp: 0, tn: 0, fn_: 0 });
    }

    #[test]
    fn hand_counted_case() {
        let m = confusion(&[1, 0, 1, 1], &[1, 1, 0, 1]).unwrap();
        assert_eq!(m, ConfusionMatrix { tp: 2, fp: 1, tn: 0, fn_: 1 });
    }

    #[test]
    fn empty_and_invalid_inputs() {
        assert!(confusion(&[], &[]).is_err());
        assert!(confusion(&[1], &[1, 0]).is_err());
        assert!(matches!(confusion(&[2], &[1]), Err(Error::InvalidLabel(2))));
    }

    #[test]
    fn logistic_row_of_the_comparison_table() {
        let s = score(&ConfusionMatrix { tp: 10, fp: 0, tn: 26, fn_: 1 });
        assert_eq!(s.precision, Some(1.0));
        // 10/11 and 2·(10/11)/(1 + 10/11) = 20/21
        assert!((s.recall.unwrap() - 0.9091).abs() < 5e-5);
        assert!((s.f1.unwrap() - 0.9524).abs() < 5e-5);
        assert!((s.accuracy.unwrap() - 0.973).abs() < 5e-4);
    }

    #[test]
    fn symmetric_counts() {
        let s = score(&ConfusionMatrix { tp: 3, fp: 3, tn: 3, fn_: 3 });
        assert_eq!(s.accuracy, Some(0.5));
        assert_eq!(s.precision, Some(0.5));
        assert_eq!(s.recall, Some(0.5));
        assert_eq!(s.f1, Some(0.5));
    }

    #[test]
    fn undefined_precision_is_flagged() {
        let s = score(&ConfusionMatrix { tp: 0, fp: 0, tn: 5, fn_: 5 });
        assert_eq!(s.recall, Some(0.0));
        assert_eq!(s.precision, None);
        assert_eq!(s.f1, None);
        let json = serde_json::to_value(s).unwrap();
        assert!(json["precision"].is_null());
    }

    #[test]
    fn constant_half_model_predicts_flood_everywhere() {
        let records = (0..6)
            .map(|i| RainfallRecord {
                year: 2000 + i,
                monthly_mm: [1.0; MONTHS],
                annual_mm: None,
                flood: u8::from(i < 2),
            })
            .collect();
        let data = Dataset::new(records).unwrap();
        let model = FnModel::new(MONTHS, |_| 0.5);
        let r = evaluate(&model, "const", &data, "test").unwrap();
        assert_eq!(r.matrix, ConfusionMatrix { tp: 2, fp: 4, tn: 0, fn_: 0 });
        assert!((r.scores.accuracy.unwrap() - 2.0 / 6.0).abs() < 1e-15);
        let narrow = FnModel::new(3, |_| 0.5);
        assert!(evaluate(&narrow, "narrow", &data, "test").is_err());
    }

    #[test]
    fn table_has_expected_columns() {
        let r = MetricsReport {
            model: "Logistic Regression".into(),
            partition: "test".into(),
            scores: score(&ConfusionMatrix { tp: 10, fp: 0, tn: 26, fn_: 1 }),
            matrix: ConfusionMatrix { tp: 10, fp: 0, tn: 26, fn_: 1 },
        };
        let t = render_table(&[r]);
        let first = t.lines().next().unwrap();
        assert!(first.starts_with("Model"));
        assert!(first.ends_with("F1-score"));
        assert!(t.contains("0.97") && t.contains("1.00") && t.contains("0.91") && t.contains("0.95"));
    }

    proptest! {
        #[test]
        fn matches_naive_counting(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..200)) {
            let (p, t): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
            let m = confusion(&p, &t).unwrap();
            let count = |a: u8, b: u8| pairs.iter().filter(|&&(x, y)| x == a && y == b).count();
            prop_assert_eq!(m, ConfusionMatrix { tp: count(1, 1), fp: count(1, 0), tn: count(0, 0), fn_: count(0, 1) });
            let s = score(&m);
            if let (Some(p), Some(r), Some(f)) = (s.precision, s.recall, s.f1) {
                prop_assert!(p.min(r) <= f + 1e-12 && f <= p.max(r) + 1e-12);
            }
            let swapped = score(&m.swapped());
            prop_assert_eq!(swapped.accuracy, s.accuracy);
        }
    }
}
