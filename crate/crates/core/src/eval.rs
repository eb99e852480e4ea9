//! Confusion matrices, hit rates and the report tables.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::data::SensorMask;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("{truths} truths for {predictions} predictions")]
    Count { predictions: usize, truths: usize },
    #[error("session {index}: predicted {predicted} gestures, truth has {truth}")]
    SessionLength {
        index: usize,
        predicted: usize,
        truth: usize,
    },
    #[error("session {index}: class {class} outside 1..={classes}")]
    Class {
        index: usize,
        class: usize,
        classes: usize,
    },
}

/// Counts indexed `[true][predicted]`, 1-based classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[(truth - 1) * self.classes + predicted - 1] += 1;
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[(truth - 1) * self.classes + predicted - 1]
    }

    pub fn row_total(&self, truth: usize) -> u64 {
        (1..=self.classes).map(|p| self.count(truth, p)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (1..=self.classes).map(|c| self.count(c, c)).sum()
    }

    /// Row-normalized percentages; empty rows are all zero.
    pub fn percentages(&self) -> Vec<Vec<f64>> {
        (1..=self.classes)
            .map(|t| {
                let total = self.row_total(t);
                (1..=self.classes)
                    .map(|p| {
                        if total == 0 {
                            0.0
                        } else {
                            100.0 * self.count(t, p) as f64 / total as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// `H_i`: the diagonal of [`percentages`](Self::percentages).
    pub fn hit_rates(&self) -> Vec<f64> {
        self.percentages()
            .iter()
            .enumerate()
            .map(|(i, row)| row[i])
            .collect()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.correct() as f64 / n as f64,
        }
    }

    pub fn counts(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.classes)
            .map(<[u64]>::to_vec)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub classes: usize,
    pub confusion_counts: Vec<Vec<u64>>,
    pub confusion_pct: Vec<Vec<f64>>,
    pub hit_rate: Vec<f64>,
    pub accuracy: f64,
    pub sessions: usize,
    pub session_exact_match: f64,
    #[serde(skip)]
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    fn from_parts(confusion: ConfusionMatrix, sessions: usize, exact: usize) -> Self {
        Self {
            classes: confusion.classes(),
            confusion_counts: confusion.counts(),
            confusion_pct: confusion.percentages(),
            hit_rate: confusion.hit_rates(),
            accuracy: confusion.accuracy(),
            sessions,
            session_exact_match: if sessions == 0 {
                0.0
            } else {
                exact as f64 / sessions as f64
            },
            confusion,
        }
    }

    /// Aligned text: confusion percentages, hit rates, accuracy.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let q = self.classes;
        let _ = writeln!(out, "Confusion matrix (% of row, row = true gesture)");
        let _ = write!(out, "{:<9}", "");
        for c in 1..=q {
            let _ = write!(out, "{:>9}", format!("Gest. {c}"));
        }
        out.push('\n');
        for (r, row) in self.confusion_pct.iter().enumerate() {
            let _ = write!(out, "{:<9}", format!("Gest. {}", r + 1));
            for v in row {
                let _ = write!(out, "{v:>9.2}");
            }
            out.push('\n');
        }
        out.push('\n');
        let _ = write!(out, "{:<9}", "");
        for c in 1..=q {
            let _ = write!(out, "{:>9}", format!("H_{c}"));
        }
        out.push('\n');
        let _ = write!(out, "{:<9}", "hit rate");
        for h in &self.hit_rate {
            let _ = write!(out, "{h:>9.2}");
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "\naccuracy: {:.2}% ({}/{})",
            100.0 * self.accuracy,
            self.confusion.correct(),
            self.confusion.total()
        );
        let _ = writeln!(
            out,
            "session exact match: {:.2}% of {} sessions",
            100.0 * self.session_exact_match,
            self.sessions
        );
        out
    }
}

/// Position-aligned scoring: slot `j` of each truth is compared with slot `j`
/// of the corresponding prediction.
pub fn score_sessions<P: AsRef<[usize]>, T: AsRef<[usize]>>(
    predictions: &[P],
    truths: &[T],
    classes: usize,
) -> Result<EvalReport, EvalError> {
    if predictions.len() != truths.len() {
        return Err(EvalError::Count {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    let mut confusion = ConfusionMatrix::new(classes);
    let mut exact = 0;
    for (index, (pred, truth)) in predictions.iter().zip(truths).enumerate() {
        let (pred, truth) = (pred.as_ref(), truth.as_ref());
        if pred.len() != truth.len() {
            return Err(EvalError::SessionLength {
                index,
                predicted: pred.len(),
                truth: truth.len(),
            });
        }
        if let Some(&class) = pred.iter().chain(truth).find(|&&c| c == 0 || c > classes) {
            return Err(EvalError::Class {
                index,
                class,
                classes,
            });
        }
        for (&t, &p) in truth.iter().zip(pred) {
            confusion.add(t, p);
        }
        if pred == truth {
            exact += 1;
        }
    }
    Ok(EvalReport::from_parts(confusion, predictions.len(), exact))
}

/// Hit rates per sensor configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub mask: SensorMask,
    pub hit_rate: Vec<f64>,
    pub accuracy: f64,
}

impl AblationReport {
    pub fn from_reports(reports: &[(SensorMask, EvalReport)]) -> Self {
        Self {
            rows: reports
                .iter()
                .map(|(mask, r)| AblationRow {
                    mask: *mask,
                    hit_rate: r.hit_rate.clone(),
                    accuracy: r.accuracy,
                })
                .collect(),
        }
    }

    pub fn render(&self) -> String {
        let q = self.rows.first().map_or(0, |r| r.hit_rate.len());
        let mut out = String::from("Hit rate (%) by sensor set\n");
        let _ = write!(out, "{:<8}", "");
        for c in 1..=q {
            let _ = write!(out, "{:>9}", format!("H_{c}"));
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<8}", row.mask.name());
            for h in &row.hit_rate {
                let _ = write!(out, "{h:>9.2}");
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates `recognize` on the same test set under each mask.
pub fn ablation_report<E>(
    masks: &[SensorMask],
    mut evaluate: impl FnMut(SensorMask) -> Result<EvalReport, E>,
) -> Result<(AblationReport, Vec<(SensorMask, EvalReport)>), E> {
    let mut reports = Vec::with_capacity(masks.len());
    for &mask in masks {
        reports.push((mask, evaluate(mask)?));
    }
    Ok((AblationReport::from_reports(&reports), reports))
}

/// Accuracy per hidden size, one row per trained model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub hidden: usize,
    pub accuracy: f64,
}

pub fn render_sweep(rows: &[SweepRow]) -> String {
    let mut out = String::from("Accuracy by hidden dimension\n");
    let _ = write!(out, "{:<11}", "dimension");
    for r in rows {
        let _ = write!(out, "{:>9}", r.hidden);
    }
    out.push('\n');
    let _ = write!(out, "{:<11}", "accuracy %");
    for r in rows {
        let _ = write!(out, "{:>9.2}", 100.0 * r.accuracy);
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let truths = vec![vec![1], vec![2, 3], vec![4, 5, 6]];
        let r = score_sessions(&truths, &truths, 6).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.session_exact_match, 1.0);
        for (i, row) in r.confusion_pct.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 100.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn single_miss() {
        let r = score_sessions(&[vec![2]], &[vec![1]], 6).unwrap();
        assert_eq!(r.confusion.count(1, 2), 1);
        assert_eq!(r.hit_rate[0], 0.0);
        assert_eq!(r.accuracy, 0.0);
    }

    #[test]
    fn always_correct_class_scores_full_hit_rate() {
        let truths = vec![vec![5, 1], vec![2, 5], vec![5]];
        let preds = vec![vec![5, 2], vec![1, 5], vec![5]];
        let r = score_sessions(&preds, &truths, 6).unwrap();
        assert_eq!(r.hit_rate[4], 100.0);
        assert_eq!(r.hit_rate[0], 0.0);
        assert_eq!(r.session_exact_match, 1.0 / 3.0);
        assert!((r.accuracy - 0.6).abs() < 1e-15);
    }

    #[test]
    fn mismatched_lengths_are_errors() {
        assert!(matches!(
            score_sessions(&[vec![1, 2]], &[vec![1]], 6),
            Err(EvalError::SessionLength { index: 0, .. })
        ));
        assert!(matches!(
            score_sessions(&[vec![1]], &[vec![1], vec![2]], 6),
            Err(EvalError::Count { .. })
        ));
        assert!(matches!(
            score_sessions(&[vec![7]], &[vec![1]], 6),
            Err(EvalError::Class { class: 7, .. })
        ));
    }

    #[test]
    fn rendering_is_table_shaped() {
        let truths = vec![vec![1], vec![2]];
        let r = score_sessions(&truths, &truths, 6).unwrap();
        let text = r.render();
        assert!(
            text.contains("Gest. 6")
                && text.contains("100.00")
                && text.contains("accuracy: 100.00%")
        );
        assert_eq!(text, r.render());

        let (ablation, _) = ablation_report::<()>(&SensorMask::ALL, |_| Ok(r.clone())).unwrap();
        let table = ablation.render();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(
            lines[2].starts_with("accel")
                && lines[3].starts_with("gyro")
                && lines[4].starts_with("both")
        );

        let sweep = render_sweep(&[
            SweepRow {
                hidden: 16,
                accuracy: 0.9585,
            },
            SweepRow {
                hidden: 32,
                accuracy: 0.9804,
            },
        ]);
        assert!(sweep.contains("95.85") && sweep.contains("98.04"));
    }

    proptest! {
        #[test]
        fn report_invariants(pairs in prop::collection::vec((1usize..=6, 1usize..=6), 1..200)) {
            let truths: Vec<Vec<usize>> = pairs.iter().map(|p| vec![p.0]).collect();
            let preds: Vec<Vec<usize>> = pairs.iter().map(|p| vec![p.1]).collect();
            let r = score_sessions(&preds, &truths, 6).unwrap();
            for (i, row) in r.confusion_pct.iter().enumerate() {
                if r.confusion.row_total(i + 1) > 0 {
                    prop_assert!((row.iter().sum::<f64>() - 100.0).abs() < 0.01);
                }
                prop_assert_eq!(r.hit_rate[i], row[i]);
            }
            let correct = pairs.iter().filter(|p| p.0 == p.1).count();
            prop_assert_eq!(r.confusion.correct(), correct as u64);
            prop_assert_eq!(r.confusion.total(), pairs.len() as u64);
            prop_assert_eq!(r.accuracy, correct as f64 / pairs.len() as f64);
        }
    }
}
