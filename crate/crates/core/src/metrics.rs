//! Classification scores and calibration diagnostics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clipped to `[EPS, 1 - EPS]` before taking logs.
pub const LOG_LOSS_EPS: f64 = 1e-15;

/// Number of equal-width bins on `[0, 1]` for calibration curves.
pub const CALIBRATION_BINS: usize = 10;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    if a == 0 {
        return Err(Error::Data("scores need at least one sample".into()));
    }
    Ok(())
}

/// One minus the mean probability assigned to the true class.
pub fn proba_loss(truth: &[usize], probs: &[Vec<f64>]) -> Result<f64> {
    check_lengths(truth.len(), probs.len())?;
    let mean = truth.iter().zip(probs).map(|(&t, p)| p[t]).sum::<f64>() / truth.len() as f64;
    Ok(1.0 - mean)
}

/// Mean negative log probability of the true class.
pub fn log_loss(truth: &[usize], probs: &[Vec<f64>]) -> Result<f64> {
    check_lengths(truth.len(), probs.len())?;
    let total: f64 = truth
        .iter()
        .zip(probs)
        .map(|(&t, p)| -p[t].clamp(LOG_LOSS_EPS, 1.0 - LOG_LOSS_EPS).ln())
        .sum();
    Ok(total / truth.len() as f64)
}

pub fn accuracy(truth: &[usize], predicted: &[usize]) -> Result<f64> {
    check_lengths(truth.len(), predicted.len())?;
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Counts with rows indexed by true class and columns by predicted class.
pub fn confusion_matrix(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Vec<Vec<u64>>> {
    check_lengths(truth.len(), predicted.len())?;
    let mut m = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::Data(format!("class index out of range for {n_classes} classes")));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

/// Support-weighted precision, recall and F1.
///
/// A class nobody predicted has precision 0.
pub fn weighted_prf(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<(f64, f64, f64)> {
    let cm = confusion_matrix(truth, predicted, n_classes)?;
    let total = truth.len() as f64;
    let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
    for k in 0..n_classes {
        let tp = cm[k][k] as f64;
        let support: u64 = cm[k].iter().sum();
        let predicted_k: u64 = cm.iter().map(|row| row[k]).sum();
        if support == 0 {
            continue;
        }
        let precision = if predicted_k == 0 {
            log::warn!("class {k} is never predicted; its precision counts as 0");
            0.0
        } else {
            tp / predicted_k as f64
        };
        let recall = tp / support as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let w = support as f64 / total;
        p += w * precision;
        r += w * recall;
        f += w * f1;
    }
    Ok((p, r, f))
}

/// Fraction of samples whose true class is among the `k` most probable.
/// Equal probabilities rank the smaller class index first.
pub fn top_k_accuracy(truth: &[usize], probs: &[Vec<f64>], k: usize) -> Result<f64> {
    check_lengths(truth.len(), probs.len())?;
    let hits = truth
        .iter()
        .zip(probs)
        .filter(|(&t, p)| {
            let pt = p[t];
            let rank = p
                .iter()
                .enumerate()
                .filter(|&(j, &pj)| pj > pt || (pj == pt && j < t))
                .count();
            rank < k
        })
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub mean_predicted: f64,
    pub true_fraction: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub bins: Vec<CalibrationBin>,
}

/// Bins predicted positive-class probabilities into ten equal-width bins
/// `[0, 0.1), .., [0.9, 1.0]` and reports each non-empty bin's mean
/// prediction and observed positive fraction.
pub fn calibration_curve(truth: &[bool], predicted: &[f64]) -> Result<CalibrationCurve> {
    check_lengths(truth.len(), predicted.len())?;
    let mut sum_p = [0.0; CALIBRATION_BINS];
    let mut pos = [0usize; CALIBRATION_BINS];
    let mut count = [0usize; CALIBRATION_BINS];
    for (&t, &p) in truth.iter().zip(predicted) {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Data(format!("probability {p} outside [0, 1]")));
        }
        let b = ((p * CALIBRATION_BINS as f64) as usize).min(CALIBRATION_BINS - 1);
        sum_p[b] += p;
        pos[b] += usize::from(t);
        count[b] += 1;
    }
    let bins = (0..CALIBRATION_BINS)
        .filter(|&b| count[b] > 0)
        .map(|b| CalibrationBin {
            lower: b as f64 / CALIBRATION_BINS as f64,
            upper: (b + 1) as f64 / CALIBRATION_BINS as f64,
            mean_predicted: sum_p[b] / count[b] as f64,
            true_fraction: pos[b] as f64 / count[b] as f64,
            count: count[b],
        })
        .collect();
    Ok(CalibrationCurve { bins })
}

/// Area between the piecewise-linear calibration curve and the diagonal,
/// over the curve's own x-extent.
///
/// Segments that cross the diagonal are split at the crossing, so each piece
/// is a trapezoid or triangle of `|y - x|`.
pub fn area_deviation(curve: &CalibrationCurve) -> f64 {
    curve
        .bins
        .windows(2)
        .map(|w| {
            let (x0, x1) = (w[0].mean_predicted, w[1].mean_predicted);
            let d0 = w[0].true_fraction - x0;
            let d1 = w[1].true_fraction - x1;
            let width = x1 - x0;
            if d0 * d1 >= 0.0 {
                width * (d0.abs() + d1.abs()) / 2.0
            } else {
                let t = d0 / (d0 - d1);
                width * (t * d0.abs() + (1.0 - t) * d1.abs()) / 2.0
            }
        })
        .sum()
}

/// Scores of a classifier on a labeled test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub samples: usize,
    pub accuracy: f64,
    pub log_loss: f64,
    pub proba_loss: f64,
    pub precision_weighted: f64,
    pub recall_weighted: f64,
    pub f1_weighted: f64,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<u64>>,
    pub top_k: BTreeMap<usize, f64>,
}

impl EvaluationReport {
    pub fn compute(
        truth: &[usize],
        predicted: &[usize],
        probs: &[Vec<f64>],
        n_classes: usize,
        top_ks: &[usize],
    ) -> Result<Self> {
        check_lengths(truth.len(), probs.len())?;
        let (precision_weighted, recall_weighted, f1_weighted) = weighted_prf(truth, predicted, n_classes)?;
        let top_k = top_ks
            .iter()
            .map(|&k| Ok((k, top_k_accuracy(truth, probs, k)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            samples: truth.len(),
            accuracy: accuracy(truth, predicted)?,
            log_loss: log_loss(truth, probs)?,
            proba_loss: proba_loss(truth, probs)?,
            precision_weighted,
            recall_weighted,
            f1_weighted,
            confusion: confusion_matrix(truth, predicted, n_classes)?,
            top_k,
        })
    }
}
