//! Repeated stratified k-fold cross-validation of the subject-level logistic
//! classifier.
//!
//! Folds are formed over subjects, so every patch of a subject lands in the
//! same fold. Within a repetition each subject is predicted exactly once, by
//! a model trained on the other folds; the decision threshold is the maximum
//! Youden index point of that model on its training subjects (or, with
//! [`ThresholdRule::Global`], of one model fitted to all subjects).

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::features::{Feature, SampleRecord, Status};
use super::logistic::{fit_logistic_rows, subject_means, SubjectRow};
use super::roc::roc_curve;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ThresholdRule {
    #[default]
    PerFold,
    Global,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub threshold: ThresholdRule,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 4,
            repetitions: 30,
            seed: 1,
            threshold: ThresholdRule::PerFold,
        }
    }
}

/// Metrics averaged over repetitions.
#[derive(Clone, Debug, PartialEq)]
pub struct CvReport {
    pub total: f64,
    pub specificity: f64,
    pub sensitivity: f64,
    pub auc: f64,
    pub folds: usize,
    pub repetitions: usize,
    /// Folds whose training data was perfectly separated.
    pub separated_folds: usize,
}

struct Repetition {
    total: f64,
    specificity: f64,
    sensitivity: f64,
    auc: f64,
    separated_folds: usize,
}

/// Stratified fold index of every subject for one repetition.
pub fn assign_folds(statuses: &[Status], folds: usize, seed: u64, repetition: usize) -> Vec<usize> {
    let mut rng = rng::stream(seed, Purpose::Folds, repetition as u64, 0);
    let mut assignment = vec![0; statuses.len()];
    for status in [Status::Cancer, Status::Normal] {
        let mut members: Vec<usize> = (0..statuses.len()).filter(|&i| statuses[i] == status).collect();
        members.shuffle(&mut rng);
        for (k, i) in members.into_iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    assignment
}

fn run_repetition(rows: &[SubjectRow], config: &CvConfig, repetition: usize, global_eta: Option<f64>) -> Result<Repetition> {
    let statuses: Vec<Status> = rows.iter().map(|r| r.status).collect();
    let labels: Vec<bool> = statuses.iter().map(|s| s.is_positive()).collect();
    let fold_of = assign_folds(&statuses, config.folds, config.seed, repetition);

    let mut scores = vec![0.0; rows.len()];
    let mut predicted = vec![false; rows.len()];
    let mut separated_folds = 0;
    for fold in 0..config.folds {
        let train: Vec<usize> = (0..rows.len()).filter(|&i| fold_of[i] != fold).collect();
        let x: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].features.clone()).collect();
        let y: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let fit = fit_logistic_rows(&x, &y)?;
        if fit.separated {
            separated_folds += 1;
        }
        // thresholds compared on the linear predictor, which orders like p
        let cut = match global_eta {
            Some(t) => t,
            None => {
                let eta: Vec<f64> = x.iter().map(|r| fit.linear_predictor(r)).collect();
                roc_curve(&eta, &y)?.youden_threshold
            }
        };
        for i in (0..rows.len()).filter(|&i| fold_of[i] == fold) {
            let eta = fit.linear_predictor(&rows[i].features);
            scores[i] = eta;
            predicted[i] = eta >= cut;
        }
    }

    let positives = labels.iter().filter(|&&l| l).count() as f64;
    let negatives = labels.len() as f64 - positives;
    let tp = predicted.iter().zip(&labels).filter(|(&p, &l)| p && l).count() as f64;
    let tn = predicted.iter().zip(&labels).filter(|(&p, &l)| !p && !l).count() as f64;
    Ok(Repetition {
        total: (tp + tn) / labels.len() as f64,
        specificity: tn / negatives,
        sensitivity: tp / positives,
        auc: roc_curve(&scores, &labels)?.auc,
        separated_folds,
    })
}

pub fn classify_cv(records: &[SampleRecord], features: &[Feature], config: &CvConfig) -> Result<CvReport> {
    if config.folds < 2 || config.repetitions == 0 {
        return Err(Error::InvalidParameter("need folds >= 2 and repetitions >= 1".into()));
    }
    let rows = subject_means(records, features);
    for status in [Status::Cancer, Status::Normal] {
        let n = rows.iter().filter(|r| r.status == status).count();
        if n < config.folds {
            return Err(Error::InsufficientGroups(format!(
                "status {status} has {n} subjects, fewer than {} folds",
                config.folds
            )));
        }
    }
    let global_eta = match config.threshold {
        ThresholdRule::PerFold => None,
        ThresholdRule::Global => {
            let x: Vec<Vec<f64>> = rows.iter().map(|r| r.features.clone()).collect();
            let y: Vec<bool> = rows.iter().map(|r| r.status.is_positive()).collect();
            let fit = fit_logistic_rows(&x, &y)?;
            let eta: Vec<f64> = x.iter().map(|r| fit.linear_predictor(r)).collect();
            Some(roc_curve(&eta, &y)?.youden_threshold)
        }
    };

    let reps: Vec<Repetition> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| run_repetition(&rows, config, r, global_eta))
        .collect::<Result<_>>()?;
    let n = reps.len() as f64;
    let avg = |f: fn(&Repetition) -> f64| reps.iter().map(f).sum::<f64>() / n;
    Ok(CvReport {
        total: avg(|r| r.total),
        specificity: avg(|r| r.specificity),
        sensitivity: avg(|r| r.sensitivity),
        auc: avg(|r| r.auc),
        folds: config.folds,
        repetitions: config.repetitions,
        separated_folds: reps.iter().map(|r| r.separated_folds).sum(),
    })
}
