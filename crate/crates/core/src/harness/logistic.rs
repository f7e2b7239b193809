//! Maximum-likelihood logistic regression by iteratively reweighted least
//! squares, and the subject-level model used for classification.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::features::{Feature, SampleRecord, Status};
use super::roc::{roc_curve, RocCurve};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const LOGLIK_TOLERANCE: f64 = 1e-10;
// stop pushing coefficients once fitted probabilities saturate
const MAX_LINEAR_PREDICTOR: f64 = 30.0;

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The classes are perfectly separated by the fitted linear predictor;
    /// the coefficients are then capped, not a finite MLE.
    pub separated: bool,
}

impl LogisticFit {
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(x))
    }
}

pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn log_likelihood(eta: &[f64], y: &[bool]) -> f64 {
    // log(1 + e^eta) computed stably
    let softplus = |t: f64| if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
    eta.iter()
        .zip(y)
        .map(|(&e, &yi)| if yi { e - softplus(e) } else { -softplus(e) })
        .sum()
}

/// Fits `logit P(y) = b0 + b . x` to the rows of `x`.
pub fn fit_logistic_rows(x: &[Vec<f64>], y: &[bool]) -> Result<LogisticFit> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidShape(format!("{} rows for {} labels", x.len(), y.len())));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::InsufficientGroups("logistic regression needs both classes".into()));
    }
    let p = x[0].len() + 1;
    if x.iter().any(|r| r.len() + 1 != p) {
        return Err(Error::InvalidShape("rows have different lengths".into()));
    }
    let n = x.len();
    let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    let target = DVector::from_fn(n, |i, _| if y[i] { 1.0 } else { 0.0 });

    let mut beta = DVector::<f64>::zeros(p);
    let mut eta = vec![0.0; n];
    let mut loglik = log_likelihood(&eta, y);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let probs: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let weights: Vec<f64> = probs.iter().map(|q| (q * (1.0 - q)).max(1e-12)).collect();
        let residual = DVector::from_fn(n, |i, _| target[i] - probs[i]);
        let weighted = DMatrix::from_fn(n, p, |i, j| design[(i, j)] * weights[i]);
        let info = design.transpose() * &weighted;
        let score = design.transpose() * residual;
        let Some(step) = info.clone().cholesky().map(|c| c.solve(&score)).or_else(|| info.lu().solve(&score)) else {
            break;
        };
        beta += step;
        let next_eta: Vec<f64> = (0..n).map(|i| (design.row(i) * &beta)[(0, 0)]).collect();
        let next = log_likelihood(&next_eta, y);
        let change = (next - loglik).abs();
        eta = next_eta;
        loglik = next;
        if change < LOGLIK_TOLERANCE {
            converged = true;
            break;
        }
        if eta.iter().any(|e| e.abs() > MAX_LINEAR_PREDICTOR) {
            break;
        }
    }

    let min_pos = eta.iter().zip(y).filter(|(_, &l)| l).map(|(e, _)| *e).fold(f64::INFINITY, f64::min);
    let max_neg = eta.iter().zip(y).filter(|(_, &l)| !l).map(|(e, _)| *e).fold(f64::NEG_INFINITY, f64::max);
    let separated = min_pos > max_neg;

    Ok(LogisticFit {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        log_likelihood: loglik,
        iterations,
        converged: converged && !separated,
        separated,
    })
}

/// Per-subject feature means, the fitted values of the nested model.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectRow {
    pub subject_id: String,
    pub status: Status,
    pub features: Vec<f64>,
}

pub fn subject_means(records: &[SampleRecord], features: &[Feature]) -> Vec<SubjectRow> {
    let mut by_subject: BTreeMap<&str, (Status, Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let entry = by_subject
            .entry(r.subject_id.as_str())
            .or_insert_with(|| (r.status, vec![0.0; features.len()], 0));
        for (acc, f) in entry.1.iter_mut().zip(features) {
            *acc += r.feature(*f);
        }
        entry.2 += 1;
    }
    by_subject
        .into_iter()
        .map(|(id, (status, sums, count))| SubjectRow {
            subject_id: id.to_string(),
            status,
            features: sums.into_iter().map(|s| s / count as f64).collect(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    pub features: Vec<Feature>,
    pub fit: LogisticFit,
    pub subjects: Vec<String>,
    /// Fitted probability of cancer for each subject.
    pub fitted: Vec<f64>,
    pub roc: RocCurve,
    pub auc: f64,
    /// Probability cut-off at the maximum Youden index.
    pub youden_threshold: f64,
}

/// Fits the subject-level model `logit P(cancer) = b0 + b . features`.
pub fn fit_logistic(records: &[SampleRecord], features: &[Feature]) -> Result<LogisticModel> {
    let rows = subject_means(records, features);
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.features.clone()).collect();
    let y: Vec<bool> = rows.iter().map(|r| r.status.is_positive()).collect();
    let fit = fit_logistic_rows(&x, &y)?;
    let eta: Vec<f64> = x.iter().map(|r| fit.linear_predictor(r)).collect();
    let roc = roc_curve(&eta, &y)?;
    Ok(LogisticModel {
        features: features.to_vec(),
        subjects: rows.into_iter().map(|r| r.subject_id).collect(),
        fitted: eta.iter().map(|&e| sigmoid(e)).collect(),
        auc: roc.auc,
        youden_threshold: sigmoid(roc.youden_threshold),
        roc,
        fit,
    })
}
