//! Monte-Carlo bias/MSE study of the estimators on synthesized fBm.
//!
//! Each replicate synthesizes one realization per target `H`, transforms it
//! with every configured filter and estimates `H` for every method and
//! direction. With contamination configured, the same decompositions are
//! re-estimated after noise injection, so the clean and contaminated arms
//! share realizations.
//!
//! Replicates run in parallel; every random stream is derived from
//! `(base_seed, target index, replicate, filter index)` and the reduction is
//! done in replicate order, so reports do not depend on the thread count.

use rayon::prelude::*;

use crate::dwt::{dwt1d, dwt2d, Decomposition, Direction};
use crate::error::{Error, Result};
use crate::estimators::{estimate, Method};
use crate::filter::{FilterName, WaveletFilter};
use crate::rng::{self, Purpose};
use crate::spectrum::{level_energies, LevelRange};
use crate::synthesis::{
    contaminate_with, ContaminationSpec, FieldMethod, FractionalSampler, NoiseScale, SynthesisSpec,
};

/// Where the match-average-energy noise variance comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseReference {
    /// Mean energy of the targeted subband of the realization itself.
    #[default]
    PerRealization,
    /// Mean of that energy over all replicates of the same target and filter.
    Ensemble,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContaminationConfig {
    pub level: usize,
    /// Empty means every direction.
    pub directions: Vec<Direction>,
    pub scale: NoiseScale,
    pub reference: NoiseReference,
}

impl ContaminationConfig {
    pub fn at_level(level: usize) -> Self {
        ContaminationConfig {
            level,
            directions: Vec::new(),
            scale: NoiseScale::MatchAverageEnergy,
            reference: NoiseReference::PerRealization,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub hurst: Vec<f64>,
    pub size: usize,
    pub filters: Vec<FilterName>,
    pub methods: Vec<Method>,
    pub levels: LevelRange,
    pub contamination: Option<ContaminationConfig>,
    pub replicates: usize,
    pub base_seed: u64,
    /// Subtract the sample mean before transforming.
    pub center: bool,
    pub field_method: FieldMethod,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dimension: 1,
            hurst: vec![0.5],
            size: 512,
            filters: vec![FilterName::Haar],
            methods: Method::ALL.to_vec(),
            levels: LevelRange::default(),
            contamination: None,
            replicates: 100,
            base_seed: 1,
            center: false,
            field_method: FieldMethod::Auto,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be at least 1".into()));
        }
        if self.hurst.is_empty() || self.filters.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidParameter("hurst, filters and methods must be non-empty".into()));
        }
        for &h in &self.hurst {
            if !(h > 0.0 && h < 1.0) {
                return Err(Error::InvalidHurst(h));
            }
        }
        if !(self.dimension == 1 || self.dimension == 2) {
            return Err(Error::InvalidParameter(format!("dimension must be 1 or 2, got {}", self.dimension)));
        }
        if self.size < 2 || !self.size.is_power_of_two() {
            return Err(Error::InvalidShape(format!("size must be a power of two, got {}", self.size)));
        }
        let top = self.size.trailing_zeros() as usize;
        if self.levels.last >= top {
            return Err(Error::InvalidLevelRange(format!(
                "levels {} exceed the finest level {} of size {}",
                self.levels,
                top - 1,
                self.size
            )));
        }
        if self.levels.len() < 2 {
            return Err(Error::InsufficientLevels(self.levels.len()));
        }
        if let Some(c) = &self.contamination {
            if c.level >= top {
                return Err(Error::InvalidLevelRange(format!("contamination level {} too fine", c.level)));
            }
            for d in &c.directions {
                if *d == Direction::Series && self.dimension == 2 || *d != Direction::Series && self.dimension == 1 {
                    return Err(Error::InvalidParameter(format!("direction {d} invalid in {}-D", self.dimension)));
                }
            }
        }
        Ok(())
    }

    fn directions(&self) -> &'static [Direction] {
        if self.dimension == 1 {
            &[Direction::Series]
        } else {
            &Direction::PLANAR
        }
    }

    fn coarsest_level(&self) -> usize {
        match &self.contamination {
            Some(c) => self.levels.first.min(c.level),
            None => self.levels.first,
        }
    }
}

/// Aggregate over replicates for one (target, filter, method, direction, arm).
#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub hurst: f64,
    pub filter: FilterName,
    pub method: Method,
    pub direction: Direction,
    pub contaminated: bool,
    pub replicates: usize,
    pub mean: f64,
    pub bias: f64,
    /// Population variance of the estimates (divisor = replicates).
    pub variance: f64,
    /// `bias^2 + variance`.
    pub mse: f64,
    pub out_of_range: usize,
    pub estimates: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    pub cells: Vec<CellSummary>,
}

impl ExperimentReport {
    pub fn find(
        &self,
        hurst: f64,
        filter: FilterName,
        method: Method,
        direction: Direction,
        contaminated: bool,
    ) -> Option<&CellSummary> {
        self.cells.iter().find(|c| {
            c.hurst == hurst
                && c.filter == filter
                && c.method == method
                && c.direction == direction
                && c.contaminated == contaminated
        })
    }
}

fn summarize(
    hurst: f64,
    filter: FilterName,
    method: Method,
    direction: Direction,
    contaminated: bool,
    estimates: Vec<f64>,
) -> CellSummary {
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let variance = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    let bias = mean - hurst;
    CellSummary {
        hurst,
        filter,
        method,
        direction,
        contaminated,
        replicates: estimates.len(),
        mean,
        bias,
        variance,
        mse: bias * bias + variance,
        out_of_range: estimates.iter().filter(|e| !(**e > 0.0 && **e < 1.0)).count(),
        estimates,
    }
}

/// Estimates of one replicate, flattened in (filter, arm, method, direction)
/// order, plus the mean energy of each contamination target band.
struct ReplicateOutcome {
    estimates: Vec<f64>,
    target_energy: Vec<f64>,
}

fn sampler(config: &ExperimentConfig, hurst: f64) -> Result<FractionalSampler> {
    let spec = SynthesisSpec {
        hurst,
        dimension: config.dimension,
        size: config.size,
        sigma: 1.0,
        seed: config.base_seed,
    };
    FractionalSampler::new(&spec, config.field_method)
}

fn synthesize(config: &ExperimentConfig, sampler: &FractionalSampler, target: usize, replicate: usize) -> Result<Decomposable> {
    let mut rng = rng::stream(config.base_seed, Purpose::Synthesis, target as u64, replicate as u64);
    Ok(if config.dimension == 1 {
        let mut x = sampler.sample_series(&mut rng)?;
        if config.center {
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            x.iter_mut().for_each(|v| *v -= mean);
        }
        Decomposable::Series(x)
    } else {
        let g = sampler.sample_field(&mut rng)?;
        Decomposable::Field(if config.center { g.centered() } else { g })
    })
}

enum Decomposable {
    Series(Vec<f64>),
    Field(crate::dwt::Grid2D),
}

impl Decomposable {
    fn transform(&self, filter: &WaveletFilter, coarsest: usize) -> Result<Decomposition> {
        Ok(match self {
            Decomposable::Series(x) => Decomposition::OneD(dwt1d(x, filter, coarsest)?),
            Decomposable::Field(g) => Decomposition::TwoD(dwt2d(g, filter, coarsest)?),
        })
    }
}

fn estimate_all(config: &ExperimentConfig, decomp: &Decomposition, out: &mut Vec<f64>) -> Result<()> {
    for &method in &config.methods {
        for &direction in config.directions() {
            let spectrum = level_energies(decomp, direction, config.levels)?;
            out.push(estimate(&spectrum, method)?.hurst);
        }
    }
    Ok(())
}

fn run_replicate(
    config: &ExperimentConfig,
    sampler: &FractionalSampler,
    target: usize,
    replicate: usize,
    ensemble: Option<&[Vec<f64>]>,
) -> Result<ReplicateOutcome> {
    let signal = synthesize(config, sampler, target, replicate)?;
    let mut estimates = Vec::new();
    let mut target_energy = Vec::new();
    for (fi, &name) in config.filters.iter().enumerate() {
        let filter = WaveletFilter::new(name);
        let decomp = signal.transform(&filter, config.coarsest_level())?;
        estimate_all(config, &decomp, &mut estimates)?;

        let Some(contamination) = &config.contamination else {
            continue;
        };
        let directions: Vec<Direction> = if contamination.directions.is_empty() {
            config.directions().to_vec()
        } else {
            contamination.directions.clone()
        };
        for &d in &directions {
            let band = decomp.band(d, contamination.level)?;
            target_energy.push(band.iter().map(|v| v * v).sum::<f64>() / band.len() as f64);
        }
        if contamination.reference == NoiseReference::Ensemble && ensemble.is_none() {
            // first pass only collects reference energies
            continue;
        }
        let mut rng = rng::stream(
            config.base_seed,
            Purpose::Contamination,
            ((target as u64) << 32) | replicate as u64,
            fi as u64,
        );
        let mut noisy = decomp.clone();
        for (di, &d) in directions.iter().enumerate() {
            let scale = match (contamination.reference, ensemble) {
                (NoiseReference::Ensemble, Some(reference)) => NoiseScale::Variance(reference[fi][di]),
                _ => contamination.scale,
            };
            let spec = ContaminationSpec {
                target_level: contamination.level,
                directions: vec![d],
                scale,
                seed: config.base_seed,
            };
            noisy = contaminate_with(&noisy, &spec, &mut rng)?;
        }
        estimate_all(config, &noisy, &mut estimates)?;
    }
    Ok(ReplicateOutcome {
        estimates,
        target_energy,
    })
}

fn run_target(
    config: &ExperimentConfig,
    sampler: &FractionalSampler,
    target: usize,
    ensemble: Option<&[Vec<f64>]>,
) -> Result<Vec<ReplicateOutcome>> {
    (0..config.replicates)
        .into_par_iter()
        .map(|replicate| {
            run_replicate(config, sampler, target, replicate, ensemble).map_err(|e| Error::Replicate {
                replicate,
                seed: config.base_seed,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Runs the configured Monte-Carlo study.
pub fn run_simulation(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let contaminated_arm = config.contamination.is_some();
    let arms: &[bool] = if contaminated_arm { &[false, true] } else { &[false] };
    let mut cells = Vec::new();

    for (target, &hurst) in config.hurst.iter().enumerate() {
        let sampler = sampler(config, hurst)?;
        let ensemble_pass = matches!(
            &config.contamination,
            Some(c) if c.reference == NoiseReference::Ensemble && c.scale == NoiseScale::MatchAverageEnergy
        );
        let outcomes = if ensemble_pass {
            let first = run_target(config, &sampler, target, None)?;
            let per_filter = first[0].target_energy.len() / config.filters.len();
            let reference: Vec<Vec<f64>> = (0..config.filters.len())
                .map(|fi| {
                    (0..per_filter)
                        .map(|di| {
                            first.iter().map(|o| o.target_energy[fi * per_filter + di]).sum::<f64>()
                                / first.len() as f64
                        })
                        .collect()
                })
                .collect();
            run_target(config, &sampler, target, Some(&reference))?
        } else {
            run_target(config, &sampler, target, None)?
        };

        let mut index = 0;
        for &filter in &config.filters {
            for &contaminated in arms {
                for &method in &config.methods {
                    for &direction in config.directions() {
                        let estimates: Vec<f64> = outcomes.iter().map(|o| o.estimates[index]).collect();
                        cells.push(summarize(hurst, filter, method, direction, contaminated, estimates));
                        index += 1;
                    }
                }
            }
        }
    }
    Ok(ExperimentReport { cells })
}
