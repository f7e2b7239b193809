//! Synthetic two-class cohorts of fBf images.
//!
//! Each subject gets one field whose Hurst exponent depends on its status.
//! Five patches are cut from the field and each patch yields a
//! [`SampleRecord`] of directional estimates.

use rayon::prelude::*;

use super::features::{image_hurst, SampleRecord, Status};
use super::patches::{extract_patches, PatchLayout};
use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::filter::{FilterName, WaveletFilter};
use crate::rng::{self, Purpose};
use crate::spectrum::LevelRange;
use crate::synthesis::{FieldMethod, FractionalSampler, SynthesisSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct CohortConfig {
    pub cancer_subjects: usize,
    pub normal_subjects: usize,
    pub cancer_hurst: f64,
    pub normal_hurst: f64,
    pub image_side: usize,
    pub layout: PatchLayout,
    pub filter: FilterName,
    pub levels: LevelRange,
    pub method: Method,
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            cancer_subjects: 50,
            normal_subjects: 50,
            cancer_hurst: 0.45,
            normal_hurst: 0.65,
            image_side: 512,
            layout: PatchLayout::with_side(256),
            filter: FilterName::Daub6,
            levels: LevelRange::default(),
            method: Method::Tt,
            seed: 1,
        }
    }
}

fn subject_records(
    config: &CohortConfig,
    filter: &WaveletFilter,
    samplers: &[FractionalSampler; 2],
    index: usize,
) -> Result<Vec<SampleRecord>> {
    let (status, sampler, label) = if index < config.cancer_subjects {
        (Status::Cancer, &samplers[0], index)
    } else {
        (Status::Normal, &samplers[1], index - config.cancer_subjects)
    };
    let id = format!("{}{:04}", if status == Status::Cancer { "c" } else { "n" }, label);
    let mut rng = rng::stream(config.seed, Purpose::Cohort, index as u64, 0);
    let field = sampler.sample_field(&mut rng)?;
    extract_patches(field.samples(), &config.layout)?
        .iter()
        .enumerate()
        .map(|(k, patch)| {
            let h = image_hurst(patch, filter, config.levels, config.method)?;
            SampleRecord::new(id.clone(), status, k as u8 + 1, h)
        })
        .collect()
}

/// Records for every subject, cancer subjects first.
pub fn synthetic_cohort(config: &CohortConfig) -> Result<Vec<SampleRecord>> {
    if config.cancer_subjects == 0 || config.normal_subjects == 0 {
        return Err(Error::InsufficientGroups("both classes need at least one subject".into()));
    }
    let filter = WaveletFilter::new(config.filter);
    let sampler = |h: f64| FractionalSampler::new(&SynthesisSpec::new(h, 2, config.image_side, config.seed), FieldMethod::Auto);
    let samplers = [sampler(config.cancer_hurst)?, sampler(config.normal_hurst)?];
    let total = config.cancer_subjects + config.normal_subjects;
    let per_subject: Vec<Vec<SampleRecord>> = (0..total)
        .into_par_iter()
        .map(|i| subject_records(config, &filter, &samplers, i))
        .collect::<Result<_>>()?;
    Ok(per_subject.into_iter().flatten().collect())
}
