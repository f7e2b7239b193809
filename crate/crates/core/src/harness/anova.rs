//! Two-level nested ANOVA: patients nested within disease status.
//!
//! Model `y_ijk = mu + alpha_i + beta_j(i) + e_ijk` with status fixed and
//! patients random. Status is tested against the patients mean square and
//! patients against the residual mean square.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::features::{Feature, SampleRecord, Status};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AnovaRow {
    pub source: String,
    pub sum_sq: f64,
    pub df: usize,
    pub mean_sq: Option<f64>,
    pub f: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnovaTable {
    /// Status, Patients(Status), Error, Total.
    pub rows: Vec<AnovaRow>,
}

impl AnovaTable {
    pub fn row(&self, source: &str) -> Option<&AnovaRow> {
        self.rows.iter().find(|r| r.source == source)
    }
}

fn f_test(numerator: f64, denominator: f64, df1: usize, df2: usize) -> (Option<f64>, Option<f64>) {
    if df1 == 0 || df2 == 0 || denominator <= 0.0 {
        return (None, None);
    }
    let f = numerator / denominator;
    let p = FisherSnedecor::new(df1 as f64, df2 as f64).ok().map(|d| d.sf(f));
    (Some(f), p)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn nested_anova(records: &[SampleRecord], feature: Feature) -> Result<AnovaTable> {
    // status -> subject -> observations
    let mut groups: BTreeMap<Status, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for r in records {
        groups
            .entry(r.status)
            .or_default()
            .entry(r.subject_id.as_str())
            .or_default()
            .push(r.feature(feature));
    }
    for status in [Status::Cancer, Status::Normal] {
        let n = groups.get(&status).map_or(0, |g| g.len());
        if n < 2 {
            return Err(Error::InsufficientGroups(format!("status {status} has {n} subjects, need 2")));
        }
    }
    if records.iter().any(|r| !r.feature(feature).is_finite()) {
        return Err(Error::Parse("non-finite feature value".into()));
    }

    let all: Vec<f64> = records.iter().map(|r| r.feature(feature)).collect();
    let grand = mean(&all);
    let mut ss_status = 0.0;
    let mut ss_subject = 0.0;
    let mut ss_error = 0.0;
    let mut subjects = 0;
    for subjects_of in groups.values() {
        let obs: Vec<f64> = subjects_of.values().flatten().copied().collect();
        let status_mean = mean(&obs);
        ss_status += obs.len() as f64 * (status_mean - grand).powi(2);
        for values in subjects_of.values() {
            let m = mean(values);
            ss_subject += values.len() as f64 * (m - status_mean).powi(2);
            ss_error += values.iter().map(|v| (v - m).powi(2)).sum::<f64>();
            subjects += 1;
        }
    }
    let ss_total: f64 = all.iter().map(|v| (v - grand).powi(2)).sum();

    let n = all.len();
    let df_status = groups.len() - 1;
    let df_subject = subjects - groups.len();
    let df_error = n - subjects;
    let ms = |ss: f64, df: usize| if df > 0 { Some(ss / df as f64) } else { None };
    let ms_status = ms(ss_status, df_status);
    let ms_subject = ms(ss_subject, df_subject);
    let ms_error = ms(ss_error, df_error);

    let (f_status, p_status) = match (ms_status, ms_subject) {
        (Some(a), Some(b)) => f_test(a, b, df_status, df_subject),
        _ => (None, None),
    };
    let (f_subject, p_subject) = match (ms_subject, ms_error) {
        (Some(a), Some(b)) => f_test(a, b, df_subject, df_error),
        _ => (None, None),
    };

    Ok(AnovaTable {
        rows: vec![
            AnovaRow {
                source: "Status".into(),
                sum_sq: ss_status,
                df: df_status,
                mean_sq: ms_status,
                f: f_status,
                p: p_status,
            },
            AnovaRow {
                source: "Patients(Status)".into(),
                sum_sq: ss_subject,
                df: df_subject,
                mean_sq: ms_subject,
                f: f_subject,
                p: p_subject,
            },
            AnovaRow {
                source: "Error".into(),
                sum_sq: ss_error,
                df: df_error,
                mean_sq: ms_error,
                f: None,
                p: None,
            },
            AnovaRow {
                source: "Total".into(),
                sum_sq: ss_total,
                df: n - 1,
                mean_sq: None,
                f: None,
                p: None,
            },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::features::DirectionalHurst;

    fn record(subject: &str, status: Status, patch: u8, hd: f64) -> SampleRecord {
        SampleRecord::new(subject, status, patch, DirectionalHurst { d: hd, h: 0.0, v: 0.0 }).unwrap()
    }

    fn design(subjects: (usize, usize), value: impl Fn(Status, usize, u8) -> f64) -> Vec<SampleRecord> {
        let mut out = Vec::new();
        for (status, count) in [(Status::Cancer, subjects.0), (Status::Normal, subjects.1)] {
            for s in 0..count {
                for p in 1..=5 {
                    out.push(record(&format!("{status}-{s}"), status, p, value(status, s, p)));
                }
            }
        }
        out
    }

    #[test]
    fn constant_observations() {
        let t = nested_anova(&design((3, 4), |_, _, _| 0.42), Feature::Hd).unwrap();
        for row in &t.rows {
            assert!(row.sum_sq.abs() < 1e-20);
        }
    }

    #[test]
    fn table_layout_for_paper_cohort() {
        // 79 + 45 subjects with 5 patches each
        let recs = design((79, 45), |st, s, p| {
            (if st == Status::Cancer { 0.1 } else { 0.0 }) + (s % 7) as f64 * 0.01 + p as f64 * 0.003
        });
        let t = nested_anova(&recs, Feature::Hd).unwrap();
        let dfs: Vec<usize> = t.rows.iter().map(|r| r.df).collect();
        assert_eq!(dfs, vec![1, 122, 496, 619]);
    }

    #[test]
    fn p_value_from_f_distribution() {
        // F(1, 10) upper tail at 4.964603 is 0.05
        let (_, p) = f_test(4.964603, 1.0, 1, 10);
        assert!((p.unwrap() - 0.05).abs() < 1e-6);
        // F(2, 20) upper tail at 3.492828 is 0.05
        let (_, p) = f_test(3.492828, 1.0, 2, 20);
        assert!((p.unwrap() - 0.05).abs() < 1e-6);
    }

    #[test]
    fn too_few_subjects() {
        let recs = design((1, 3), |_, s, p| s as f64 + p as f64);
        assert!(matches!(nested_anova(&recs, Feature::Hd), Err(Error::InsufficientGroups(_))));
    }
}
