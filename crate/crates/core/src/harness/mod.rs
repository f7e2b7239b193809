//! Benchmarking and classification built on top of the estimators.

pub mod anova;
pub mod cohort;
pub mod cv;
pub mod features;
pub mod logistic;
pub mod patches;
pub mod roc;
pub mod simulation;

pub use anova::{nested_anova, AnovaRow, AnovaTable};
pub use cohort::{synthetic_cohort, CohortConfig};
pub use cv::{classify_cv, CvConfig, CvReport, ThresholdRule};
pub use features::{image_hurst, DirectionalHurst, Feature, SampleRecord, Status};
pub use logistic::{fit_logistic, LogisticFit, LogisticModel};
pub use patches::{extract_patches, PatchLayout, Placement};
pub use roc::{roc_curve, RocCurve};
pub use simulation::{run_simulation, CellSummary, ContaminationConfig, ExperimentConfig, ExperimentReport, NoiseReference};
