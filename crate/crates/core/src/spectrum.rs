//! Level-wise wavelet spectra.
//!
//! A spectrum point at level `j` stores the number of coefficients `n_j`, the
//! mean energy `mu_j = sum |d_jk|^2 / n_j` and `y_j = log2 mu_j`, possibly
//! shifted by a bias correction. All logarithms in stored values are base 2.

use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::digamma;

use crate::dwt::{Decomposition, Direction};
use crate::error::{Error, Result};

/// Bias correction applied to the log-energies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BiasMode {
    #[default]
    None,
    /// `y_j + 1 / (n_j ln 2)`.
    SecondOrder,
    /// `y_j - (psi(n_j/2) - ln(n_j/2)) / ln 2`.
    ExactDigamma,
}

impl BiasMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BiasMode::None => "none",
            BiasMode::SecondOrder => "av",
            BiasMode::ExactDigamma => "digamma",
        }
    }
}

impl fmt::Display for BiasMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BiasMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(BiasMode::None),
            "av" | "second_order" | "second-order" => Ok(BiasMode::SecondOrder),
            "digamma" | "exact_digamma" | "exact" => Ok(BiasMode::ExactDigamma),
            other => Err(Error::Parse(format!("unknown bias mode `{other}`"))),
        }
    }
}

/// Inclusive range of decomposition levels used for a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LevelRange {
    pub first: usize,
    pub last: usize,
}

impl LevelRange {
    pub fn new(first: usize, last: usize) -> Result<Self> {
        if first > last {
            return Err(Error::InvalidLevelRange(format!("{first}:{last} is empty")));
        }
        Ok(LevelRange { first, last })
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }

    /// Default range for inputs of side `2^J`: levels `J-6` to `J-2`, which
    /// leaves out the finest level and is `3:7` at side 512.
    pub fn for_size(size: usize) -> Result<Self> {
        if size < 8 || !size.is_power_of_two() {
            return Err(Error::InvalidShape(format!("no default level range for size {size}")));
        }
        let top = size.trailing_zeros() as usize;
        LevelRange::new(top.saturating_sub(6), top - 2)
    }
}

impl Default for LevelRange {
    fn default() -> Self {
        LevelRange { first: 3, last: 7 }
    }
}

impl fmt::Display for LevelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.first, self.last)
    }
}

impl FromStr for LevelRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .or_else(|| s.split_once('-'))
            .ok_or_else(|| Error::Parse(format!("level range `{s}` must look like 3:7")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad level `{t}`")))
        };
        LevelRange::new(parse(a)?, parse(b)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumPoint {
    pub level: usize,
    pub count: usize,
    pub mean_energy: f64,
    pub log_energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveletSpectrum {
    pub direction: Direction,
    pub dimension: usize,
    pub points: Vec<SpectrumPoint>,
    pub bias_mode: BiasMode,
}

impl WaveletSpectrum {
    /// Builds a spectrum from externally supplied points, checking invariants.
    pub fn from_points(
        direction: Direction,
        dimension: usize,
        points: Vec<SpectrumPoint>,
        bias_mode: BiasMode,
    ) -> Result<Self> {
        if !(dimension == 1 || dimension == 2) {
            return Err(Error::InvalidParameter(format!("dimension must be 1 or 2, got {dimension}")));
        }
        for w in points.windows(2) {
            if w[1].level <= w[0].level {
                return Err(Error::InvalidLevelRange("spectrum levels must strictly increase".into()));
            }
        }
        for p in &points {
            let expected = level_count(p.level, dimension);
            if p.count != expected {
                return Err(Error::InvalidShape(format!(
                    "level {} has count {}, expected {expected}",
                    p.level, p.count
                )));
            }
            if p.mean_energy.is_nan() || p.mean_energy < 0.0 || !p.log_energy.is_finite() {
                return Err(Error::Parse(format!("level {} has invalid energy", p.level)));
            }
        }
        Ok(WaveletSpectrum {
            direction,
            dimension,
            points,
            bias_mode,
        })
    }

    /// A noiseless spectrum `y_j = slope * j + intercept` with matching counts.
    pub fn exact_law(dimension: usize, levels: LevelRange, slope: f64, intercept: f64) -> Self {
        let points = levels
            .levels()
            .map(|j| {
                let y = slope * j as f64 + intercept;
                SpectrumPoint {
                    level: j,
                    count: level_count(j, dimension),
                    mean_energy: y.exp2(),
                    log_energy: y,
                }
            })
            .collect();
        WaveletSpectrum {
            direction: if dimension == 1 { Direction::Series } else { Direction::Diagonal },
            dimension,
            points,
            bias_mode: BiasMode::None,
        }
    }

    pub fn levels(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.level as f64).collect()
    }

    pub fn log_energies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.log_energy).collect()
    }

    /// Adds `offset` to every log-energy; the fitted slope is unchanged.
    pub fn shifted(&self, offset: f64) -> WaveletSpectrum {
        let mut out = self.clone();
        for p in &mut out.points {
            p.log_energy += offset;
        }
        out
    }
}

/// `n_j = 2^{m j}`.
pub fn level_count(level: usize, dimension: usize) -> usize {
    1usize << (dimension * level)
}

/// Empirical mean energies and log2 spectrum of one direction.
pub fn level_energies(decomp: &Decomposition, direction: Direction, range: LevelRange) -> Result<WaveletSpectrum> {
    if range.first < decomp.coarsest_level() || range.last > decomp.finest_level() {
        return Err(Error::InvalidLevelRange(format!(
            "levels {range} not inside decomposition levels {}:{}",
            decomp.coarsest_level(),
            decomp.finest_level()
        )));
    }
    let mut points = Vec::with_capacity(range.len());
    for level in range.levels() {
        let band = decomp.band(direction, level)?;
        let mean_energy = band.iter().map(|v| v * v).sum::<f64>() / band.len() as f64;
        if mean_energy <= 0.0 || !mean_energy.is_finite() {
            return Err(Error::DegenerateLevel { level, direction });
        }
        points.push(SpectrumPoint {
            level,
            count: band.len(),
            mean_energy,
            log_energy: mean_energy.log2(),
        });
    }
    Ok(WaveletSpectrum {
        direction,
        dimension: decomp.dimension(),
        points,
        bias_mode: BiasMode::None,
    })
}

/// Amount added to `y_j` by a correction for a level with `count` coefficients.
pub fn bias_offset(count: usize, mode: BiasMode) -> f64 {
    let n = count as f64;
    let ln2 = std::f64::consts::LN_2;
    match mode {
        BiasMode::None => 0.0,
        BiasMode::SecondOrder => 1.0 / (n * ln2),
        BiasMode::ExactDigamma => -exact_log2_bias(count),
    }
}

/// `E[log2 mu] - log2 E[mu]` for a mean of `count` squared standard normals.
pub fn exact_log2_bias(count: usize) -> f64 {
    let half = count as f64 / 2.0;
    psi_minus_ln(half) / std::f64::consts::LN_2
}

// psi(x) - ln x without cancellation for large x
fn psi_minus_ln(x: f64) -> f64 {
    if x < 10.0 {
        return digamma(x) - x.ln();
    }
    // -1/(2x) - sum B_2k / (2k x^2k)
    const TERMS: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
    ];
    let inv2 = 1.0 / (x * x);
    let mut power = inv2;
    let mut sum = 0.0;
    for t in TERMS {
        sum += t * power;
        power *= inv2;
    }
    -0.5 / x - sum
}

pub fn apply_bias_correction(spec: &WaveletSpectrum, mode: BiasMode) -> Result<WaveletSpectrum> {
    if spec.bias_mode != BiasMode::None {
        return Err(Error::AlreadyCorrected);
    }
    let mut out = spec.clone();
    for p in &mut out.points {
        p.log_energy += bias_offset(p.count, mode);
    }
    out.bias_mode = mode;
    Ok(out)
}

/// Asymptotic variance of `log2 mu_j`: `2 / (n_j ln^2 2)`.
pub fn av_variance(count: usize) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    2.0 / (count as f64 * ln2 * ln2)
}

/// Regression weight of a level, the reciprocal of [`av_variance`].
pub fn av_weight(count: usize) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    count as f64 * ln2 * ln2 / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dwt::{dwt2d, Decomposition1D, Grid2D};
    use crate::filter::{FilterName, WaveletFilter};

    #[test]
    fn single_coefficient_band() {
        let dec = Decomposition::OneD(Decomposition1D {
            coarsest_level: 1,
            details: vec![vec![0.0, 0.0], vec![0.0, 2.0, 0.0, 0.0]],
            approx: vec![1.0, 1.0],
        });
        let s = level_energies(&dec, Direction::Series, LevelRange::new(2, 2).unwrap()).unwrap();
        assert_eq!(s.points[0].count, 4);
        assert_eq!(s.points[0].mean_energy, 1.0);
        assert_eq!(s.points[0].log_energy, 0.0);
        assert!(matches!(
            level_energies(&dec, Direction::Series, LevelRange::new(1, 2).unwrap()),
            Err(Error::DegenerateLevel { level: 1, .. })
        ));
    }

    #[test]
    fn constant_image_is_degenerate() {
        let grid = Grid2D::from_fn(64, |_| 1.0).unwrap();
        let dec = Decomposition::TwoD(dwt2d(&grid, &WaveletFilter::new(FilterName::Haar), 0).unwrap());
        assert!(matches!(
            level_energies(&dec, Direction::Diagonal, LevelRange::new(2, 5).unwrap()),
            Err(Error::DegenerateLevel { .. })
        ));
    }

    #[test]
    fn level_range_checks() {
        let grid = Grid2D::from_fn(16, |(r, c)| (r * 3 + c * c) as f64).unwrap();
        let dec = Decomposition::TwoD(dwt2d(&grid, &WaveletFilter::new(FilterName::Haar), 1).unwrap());
        assert!(matches!(
            level_energies(&dec, Direction::Diagonal, LevelRange::new(1, 4).unwrap()),
            Err(Error::InvalidLevelRange(_))
        ));
        assert!(LevelRange::new(5, 3).is_err());
        assert_eq!("4:9".parse::<LevelRange>().unwrap(), LevelRange::new(4, 9).unwrap());
    }

    #[test]
    fn second_order_offset_at_64() {
        let off = bias_offset(64, BiasMode::SecondOrder);
        assert!((off - 1.0 / (64.0 * std::f64::consts::LN_2)).abs() < 1e-15);
        assert!((off - 0.022542).abs() < 5e-7);
    }

    #[test]
    fn corrections_vanish_for_large_counts() {
        let mut prev_second = f64::INFINITY;
        let mut prev_exact = f64::INFINITY;
        for j in 1..=20 {
            let n = 1usize << j;
            let a = bias_offset(n, BiasMode::SecondOrder);
            let b = bias_offset(n, BiasMode::ExactDigamma);
            assert!(a > 0.0 && b > 0.0);
            assert!(a < prev_second && b < prev_exact);
            prev_second = a;
            prev_exact = b;
        }
        assert!(prev_second < 2e-6 && prev_exact < 2e-6);
    }

    #[test]
    fn exact_and_second_order_differ_at_small_counts() {
        // psi(2) - ln 2 = 1 - gamma - ln 2
        let euler = 0.577_215_664_901_532_9;
        let expected = (1.0 - euler - 2f64.ln()) / std::f64::consts::LN_2;
        assert!((exact_log2_bias(4) - expected).abs() < 1e-13);
        let d = bias_offset(4, BiasMode::ExactDigamma) - bias_offset(4, BiasMode::SecondOrder);
        assert!(d.abs() > 1e-3);
    }

    #[test]
    fn exact_bias_matches_high_precision_values() {
        // (psi(n/2) - ln(n/2)) / ln 2 evaluated in 50-digit arithmetic
        let reference = [
            (4usize, -0.390_051_136_387_903_74),
            (20, -0.073_335_801_331_919_922),
            (64, -0.022_659_505_376_695_352),
            (1024, -0.001_409_340_496_095_479_7),
            (65536, -0.000_022_013_891_278_311_150),
        ];
        for (count, expected) in reference {
            let got = exact_log2_bias(count);
            assert!((got - expected).abs() < 1e-14 * expected.abs(), "{count}: {got} vs {expected}");
        }
    }

    #[test]
    fn default_range_tracks_size() {
        assert_eq!(LevelRange::for_size(512).unwrap(), LevelRange::default());
        assert_eq!(LevelRange::for_size(256).unwrap(), LevelRange::new(2, 6).unwrap());
        assert_eq!(LevelRange::for_size(1024).unwrap(), LevelRange::new(4, 8).unwrap());
        assert_eq!(LevelRange::for_size(16).unwrap(), LevelRange::new(0, 2).unwrap());
        assert!(LevelRange::for_size(100).is_err());
    }

    #[test]
    fn double_correction_rejected() {
        let s = WaveletSpectrum::exact_law(2, LevelRange::default(), -3.0, 1.0);
        let c = apply_bias_correction(&s, BiasMode::SecondOrder).unwrap();
        assert!(matches!(apply_bias_correction(&c, BiasMode::ExactDigamma), Err(Error::AlreadyCorrected)));
    }

    #[test]
    fn variance_and_weight() {
        let ln2 = std::f64::consts::LN_2;
        assert!((av_variance(2) - 1.0 / (ln2 * ln2)).abs() < 1e-15);
        assert!((av_variance(2) - 2.0814).abs() < 1e-4);
        let w: Vec<f64> = (3..=7).map(|j| av_weight(level_count(j, 2))).collect();
        for (i, wi) in w.iter().enumerate() {
            assert!((wi / w[0] - 4f64.powi(i as i32)).abs() < 1e-12);
        }
        for n in [1, 7, 4096] {
            assert!((av_variance(n) * av_weight(n) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn from_points_validates_counts() {
        let p = SpectrumPoint {
            level: 3,
            count: 8,
            mean_energy: 1.0,
            log_energy: 0.0,
        };
        assert!(WaveletSpectrum::from_points(Direction::Series, 1, vec![p], BiasMode::None).is_ok());
        assert!(WaveletSpectrum::from_points(Direction::Diagonal, 2, vec![p], BiasMode::None).is_err());
    }
}
