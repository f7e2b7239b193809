//! Hurst exponent estimators operating on a [`WaveletSpectrum`].
//!
//! All three estimators fit the slope `s` of `y_j` against `j` and report
//! `H = -(s + m) / 2` for an `m`-dimensional signal:
//!
//! * OLS: unweighted least squares on the raw log-energies.
//! * AV: bias-corrected weighted least squares with weights `∝ n_j`.
//! * TT: weighted mean of all bias-corrected pairwise slopes, each pair
//!   weighted by `(i - j)^2 HA(2^{mi}, 2^{mj})`, the inverse of the pairwise
//!   slope variance.
//!
//! Estimates are never clamped to `(0, 1)`; values outside are flagged.

use std::fmt;
use std::str::FromStr;

use crate::dwt::Direction;
use crate::error::{Error, Result};
use crate::spectrum::{apply_bias_correction, BiasMode, LevelRange, WaveletSpectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ols,
    Av,
    Tt,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ols, Method::Av, Method::Tt];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::Av => "av",
            Method::Tt => "tt",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ols" => Ok(Method::Ols),
            "av" => Ok(Method::Av),
            "tt" => Ok(Method::Tt),
            other => Err(Error::Parse(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HurstEstimate {
    pub method: Method,
    pub direction: Direction,
    pub dimension: usize,
    pub slope: f64,
    pub hurst: f64,
    pub level_range: LevelRange,
    pub n_levels: usize,
    /// Set when the estimate falls outside `(0, 1)`.
    pub out_of_range: bool,
}

impl HurstEstimate {
    fn new(method: Method, spec: &WaveletSpectrum, slope: f64) -> Self {
        let hurst = slope_to_hurst(slope, spec.dimension);
        let first = spec.points.first().map_or(0, |p| p.level);
        let last = spec.points.last().map_or(0, |p| p.level);
        HurstEstimate {
            method,
            direction: spec.direction,
            dimension: spec.dimension,
            slope,
            hurst,
            level_range: LevelRange { first, last },
            n_levels: spec.points.len(),
            out_of_range: !(hurst > 0.0 && hurst < 1.0),
        }
    }

    pub fn flags(&self) -> &'static str {
        if self.out_of_range {
            "out_of_range"
        } else {
            ""
        }
    }
}

/// Inverts the slope law `s = -(2H + m)`.
pub fn slope_to_hurst(slope: f64, dimension: usize) -> f64 {
    -(slope + dimension as f64) / 2.0
}

fn check_levels(spec: &WaveletSpectrum) -> Result<()> {
    if spec.points.len() < 2 {
        return Err(Error::InsufficientLevels(spec.points.len()));
    }
    Ok(())
}

/// Weighted least-squares slope of `y` on `x`.
pub(crate) fn weighted_slope(x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for ((xi, yi), wi) in x.iter().zip(y).zip(w) {
        sxy += wi * (xi - mx) * (yi - my);
        sxx += wi * (xi - mx) * (xi - mx);
    }
    sxy / sxx
}

pub fn estimate_ols(spec: &WaveletSpectrum) -> Result<HurstEstimate> {
    check_levels(spec)?;
    let x = spec.levels();
    let y = spec.log_energies();
    let slope = weighted_slope(&x, &y, &vec![1.0; x.len()]);
    Ok(HurstEstimate::new(Method::Ols, spec, slope))
}

/// Abry-Veitch estimate with the second-order bias correction.
pub fn estimate_av(spec: &WaveletSpectrum) -> Result<HurstEstimate> {
    estimate_av_with(spec, BiasMode::SecondOrder)
}

/// Abry-Veitch estimate with an explicit correction; `BiasMode::None` fits
/// the weighted regression on `y_j` as given.
pub fn estimate_av_with(spec: &WaveletSpectrum, bias: BiasMode) -> Result<HurstEstimate> {
    check_levels(spec)?;
    let corrected = if bias == BiasMode::None {
        spec.clone()
    } else {
        apply_bias_correction(spec, bias)?
    };
    let x = corrected.levels();
    let y = corrected.log_energies();
    // weights n_j ln^2 2 / 2; the constant cancels
    let w: Vec<f64> = corrected.points.iter().map(|p| p.count as f64).collect();
    let slope = weighted_slope(&x, &y, &w);
    Ok(HurstEstimate::new(Method::Av, spec, slope))
}

/// Weight of the pair of levels `(i, j)`: `(i - j)^2 HA(2^{mi}, 2^{mj})`.
pub fn pairwise_weight(i: usize, j: usize, dimension: usize) -> Result<f64> {
    if i == j {
        return Err(Error::DegeneratePair(i));
    }
    let a = (dimension as f64 * i as f64).exp2();
    let b = (dimension as f64 * j as f64).exp2();
    let gap = i as f64 - j as f64;
    Ok(gap * gap * 2.0 * a * b / (a + b))
}

/// Bias correction added to the pairwise slope between levels `i < j`.
pub fn pairwise_correction(i: usize, j: usize, dimension: usize) -> f64 {
    let m = dimension as f64;
    let inv = |level: usize| (-(m * level as f64)).exp2();
    (inv(j) - inv(i)) / ((j as f64 - i as f64) * std::f64::consts::LN_2)
}

/// Theil-type estimate with the pairwise bias correction.
pub fn estimate_tt(spec: &WaveletSpectrum) -> Result<HurstEstimate> {
    estimate_tt_with(spec, true)
}

/// Theil-type estimate; `corrected = false` zeroes the pairwise corrections.
pub fn estimate_tt_with(spec: &WaveletSpectrum, corrected: bool) -> Result<HurstEstimate> {
    check_levels(spec)?;
    if corrected && spec.bias_mode != BiasMode::None {
        return Err(Error::AlreadyCorrected);
    }
    let m = spec.dimension;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, p) in spec.points.iter().enumerate() {
        for q in &spec.points[a + 1..] {
            let (i, j) = (p.level, q.level);
            let mut slope = (q.log_energy - p.log_energy) / (j as f64 - i as f64);
            if corrected {
                slope += pairwise_correction(i, j, m);
            }
            let w = pairwise_weight(i, j, m)?;
            num += w * slope;
            den += w;
        }
    }
    Ok(HurstEstimate::new(Method::Tt, spec, num / den))
}

/// Runs `method` with its default corrections.
pub fn estimate(spec: &WaveletSpectrum, method: Method) -> Result<HurstEstimate> {
    match method {
        Method::Ols => estimate_ols(spec),
        Method::Av => estimate_av(spec),
        Method::Tt => estimate_tt(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{SpectrumPoint, LevelRange};

    fn line(dimension: usize, levels: LevelRange, slope: f64, intercept: f64) -> WaveletSpectrum {
        WaveletSpectrum::exact_law(dimension, levels, slope, intercept)
    }

    #[test]
    fn slope_inversion() {
        assert_eq!(slope_to_hurst(-3.0, 2), 0.5);
        assert_eq!(slope_to_hurst(-2.0, 1), 0.5);
        assert_eq!(slope_to_hurst(-2.0, 2), 0.0);
    }

    #[test]
    fn boundary_estimate_is_flagged() {
        let est = estimate_ols(&line(2, LevelRange::default(), -2.0, 0.0)).unwrap();
        assert!(est.hurst.abs() < 1e-12);
        assert!(est.out_of_range);
        assert_eq!(est.flags(), "out_of_range");
    }

    #[test]
    fn ols_exact_line() {
        let est = estimate_ols(&line(2, LevelRange::default(), -3.0, 5.0)).unwrap();
        assert!((est.hurst - 0.5).abs() < 1e-12);
        assert_eq!(est.n_levels, 5);
        assert!(!est.out_of_range);
    }

    #[test]
    fn two_points_any_intercept() {
        for c in [-10.0, 0.0, 3.7] {
            let s = line(2, LevelRange::new(3, 4).unwrap(), -3.0, c);
            assert!((estimate_ols(&s).unwrap().slope + 3.0).abs() < 1e-12);
            assert!((estimate_ols(&s).unwrap().hurst - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn av_with_zeroed_correction_is_exact() {
        let est = estimate_av_with(&line(1, LevelRange::default(), -2.4, 1.0), BiasMode::None).unwrap();
        assert!((est.hurst - 0.7).abs() < 1e-12);
    }

    #[test]
    fn av_with_equal_counts_reduces_to_ols_on_corrected() {
        // fabricated equal-count points bypass the count invariant on purpose
        let points: Vec<SpectrumPoint> = [(3, 0.3), (4, -1.1), (5, -2.0), (6, -4.2)]
            .iter()
            .map(|&(level, y)| SpectrumPoint {
                level,
                count: 16,
                mean_energy: f64::exp2(y),
                log_energy: y,
            })
            .collect();
        let spec = WaveletSpectrum {
            direction: Direction::Series,
            dimension: 1,
            points,
            bias_mode: BiasMode::None,
        };
        let corrected = apply_bias_correction(&spec, BiasMode::SecondOrder).unwrap();
        let av = estimate_av(&spec).unwrap();
        let ols = estimate_ols(&corrected).unwrap();
        assert!((av.slope - ols.slope).abs() < 1e-12);
    }

    #[test]
    fn insufficient_levels() {
        let s = line(2, LevelRange::new(3, 3).unwrap(), -3.0, 0.0);
        for m in Method::ALL {
            assert!(matches!(estimate(&s, m), Err(Error::InsufficientLevels(1))));
        }
    }

    #[test]
    fn pairwise_weight_examples() {
        assert!((pairwise_weight(3, 4, 2).unwrap() - 102.4).abs() < 1e-12);
        let ha = 2.0 * 64.0 * 1024.0 / (64.0 + 1024.0);
        assert!((pairwise_weight(3, 5, 2).unwrap() - 4.0 * ha).abs() < 1e-12);
        assert!((pairwise_weight(3, 5, 2).unwrap() - 481.88).abs() < 5e-3);
        assert_eq!(pairwise_weight(5, 3, 2).unwrap(), pairwise_weight(3, 5, 2).unwrap());
        assert!(matches!(pairwise_weight(4, 4, 1), Err(Error::DegeneratePair(4))));
    }

    #[test]
    fn tt_two_points_is_corrected_pair_slope() {
        let s = line(2, LevelRange::new(3, 4).unwrap(), -3.0, 0.0);
        let est = estimate_tt(&s).unwrap();
        let expected = -3.0 + (1.0 / 256.0 - 1.0 / 64.0) / std::f64::consts::LN_2;
        assert!((est.slope - expected).abs() < 1e-12);
    }

    #[test]
    fn tt_refuses_precorrected_spectrum() {
        let s = apply_bias_correction(&line(2, LevelRange::default(), -3.0, 0.0), BiasMode::SecondOrder).unwrap();
        assert!(matches!(estimate_tt(&s), Err(Error::AlreadyCorrected)));
        assert!(estimate_tt_with(&s, false).is_ok());
    }

    #[test]
    fn flat_spectrum_gives_minus_half_dimension() {
        let s = line(2, LevelRange::default(), 0.0, 4.0);
        let est = estimate_ols(&s).unwrap();
        assert_eq!(est.slope, 0.0);
        assert_eq!(est.hurst, -1.0);
        assert!(est.out_of_range);
        assert_eq!(estimate_tt_with(&s, false).unwrap().hurst, -1.0);
    }
}
