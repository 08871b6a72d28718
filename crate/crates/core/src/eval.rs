//! Mask scoring: confusion counts, F-score and misclassified-pixel totals.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::{Add, AddAssign};

use serde::Serialize;

use crate::dataio::{GroundTruth, GtLabel};
use crate::error::{Error, Result};

/// Pixel counts with foreground as the positive class. Pixels labelled
/// unknown in the ground truth are not counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

impl ConfusionCounts {
    pub fn evaluated(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }
}

impl Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            true_pos: self.true_pos + o.true_pos,
            false_pos: self.false_pos + o.false_pos,
            false_neg: self.false_neg + o.false_neg,
            true_neg: self.true_neg + o.true_neg,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: ConfusionCounts) {
        *self = *self + o;
    }
}

pub fn confusion(mask: &[bool], gt: &[GtLabel]) -> Result<ConfusionCounts> {
    if mask.len() != gt.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("mask of {} pixels", gt.len()),
            actual: format!("{} pixels", mask.len()),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&m, &g) in mask.iter().zip(gt) {
        match (m, g) {
            (_, GtLabel::Unknown) => {}
            (true, GtLabel::Foreground) => c.true_pos += 1,
            (true, GtLabel::Background) => c.false_pos += 1,
            (false, GtLabel::Foreground) => c.false_neg += 1,
            (false, GtLabel::Background) => c.true_neg += 1,
        }
    }
    Ok(c)
}

/// Confusion counts against a plain boolean ground truth.
pub fn confusion_binary(mask: &[bool], gt: &[bool]) -> Result<ConfusionCounts> {
    let labels: Vec<GtLabel> = gt
        .iter()
        .map(|&g| {
            if g {
                GtLabel::Foreground
            } else {
                GtLabel::Background
            }
        })
        .collect();
    confusion(mask, &labels)
}

/// `2 tp / (2 tp + fp + fn)`; 1 when both mask and ground truth are empty.
pub fn f_score(c: &ConfusionCounts) -> f64 {
    let denom = 2 * c.true_pos + c.false_pos + c.false_neg;
    if denom == 0 {
        return 1.0;
    }
    (2 * c.true_pos) as f64 / denom as f64
}

/// `fp + fn`
pub fn misclassified(c: &ConfusionCounts) -> u64 {
    c.false_pos + c.false_neg
}

/// Scores of a set of masks against ground truth.
#[derive(Debug, Clone, Default)]
pub struct EvalReport {
    pub per_frame: Vec<(String, ConfusionCounts)>,
    pub total: ConfusionCounts,
    /// Masks without ground truth; excluded from the totals.
    pub unmatched: Vec<String>,
}

impl EvalReport {
    pub fn frames_evaluated(&self) -> usize {
        self.per_frame.len()
    }
}

pub fn evaluate_masks(masks: &BTreeMap<String, Vec<bool>>, gt: &GroundTruth) -> Result<EvalReport> {
    let mut report = EvalReport::default();
    for (stem, mask) in masks {
        match gt.get(stem) {
            Some(labels) => {
                let c = confusion(mask, labels)?;
                report.total += c;
                report.per_frame.push((stem.clone(), c));
            }
            None => report.unmatched.push(stem.clone()),
        }
    }
    Ok(report)
}

/// One row of the metrics CSV.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MetricsRow {
    pub sequence: String,
    pub frame: String,
    pub frames_evaluated: usize,
    pub f_score: f64,
    pub misclassified: u64,
    pub runtime_seconds: Option<f64>,
    pub iterations: Option<usize>,
}

/// Per-frame rows followed by an aggregate row whose frame column is `ALL`.
pub fn report_rows(
    sequence: &str,
    report: &EvalReport,
    runtime_seconds: Option<f64>,
    iterations: Option<usize>,
) -> Vec<MetricsRow> {
    let mut rows: Vec<MetricsRow> = report
        .per_frame
        .iter()
        .map(|(stem, c)| MetricsRow {
            sequence: sequence.to_string(),
            frame: stem.clone(),
            frames_evaluated: 1,
            f_score: f_score(c),
            misclassified: misclassified(c),
            runtime_seconds: None,
            iterations: None,
        })
        .collect();
    rows.push(MetricsRow {
        sequence: sequence.to_string(),
        frame: "ALL".to_string(),
        frames_evaluated: report.frames_evaluated(),
        f_score: f_score(&report.total),
        misclassified: misclassified(&report.total),
        runtime_seconds,
        iterations,
    });
    rows
}

pub fn write_metrics_csv<W: Write>(
    out: W,
    rows: &[MetricsRow],
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
