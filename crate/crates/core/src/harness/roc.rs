//! ROC curve, trapezoidal AUC and the Youden operating point.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Threshold producing each point; positive means `score >= threshold`.
    /// The first point uses `+inf`.
    pub thresholds: Vec<f64>,
    pub auc: f64,
    pub youden_threshold: f64,
    pub youden_index: f64,
}

/// Sweeps every distinct score as a threshold, highest first.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidShape(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Parse("NaN score".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::InsufficientGroups("ROC needs both classes".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
        thresholds.push(threshold);
    }

    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();

    let mut youden_index = f64::NEG_INFINITY;
    let mut youden_threshold = f64::INFINITY;
    for (&(fpr, tpr), &t) in points.iter().zip(&thresholds) {
        let j = tpr - fpr;
        if j > youden_index {
            youden_index = j;
            youden_threshold = t;
        }
    }

    Ok(RocCurve {
        points,
        thresholds,
        auc,
        youden_threshold,
        youden_index,
    })
}
