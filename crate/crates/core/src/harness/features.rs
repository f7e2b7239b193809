//! Directional Hurst features of image patches.

use std::fmt;
use std::str::FromStr;

use crate::dwt::{dwt2d, Decomposition, Direction, Grid2D};
use crate::error::{Error, Result};
use crate::estimators::{estimate, Method};
use crate::filter::WaveletFilter;
use crate::spectrum::{level_energies, LevelRange};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Cancer,
    Normal,
}

impl Status {
    /// Cancer is the positive class.
    pub fn is_positive(self) -> bool {
        self == Status::Cancer
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Cancer => "cancer",
            Status::Normal => "normal",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cancer" | "1" => Ok(Status::Cancer),
            "normal" | "0" => Ok(Status::Normal),
            other => Err(Error::Parse(format!("unknown status `{other}`"))),
        }
    }
}

/// Which directional estimate a model or ANOVA uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Feature {
    Hd,
    Hh,
    Hv,
}

impl Feature {
    pub fn as_str(self) -> &'static str {
        match self {
            Feature::Hd => "hd",
            Feature::Hh => "hh",
            Feature::Hv => "hv",
        }
    }

    /// Parses a comma separated list such as `hd,hh`.
    pub fn parse_list(s: &str) -> Result<Vec<Feature>> {
        let list: Vec<Feature> = s.split(',').map(str::parse).collect::<Result<_>>()?;
        if list.is_empty() {
            return Err(Error::Parse("empty feature list".into()));
        }
        Ok(list)
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hd" | "d" => Ok(Feature::Hd),
            "hh" | "h" => Ok(Feature::Hh),
            "hv" | "v" => Ok(Feature::Hv),
            other => Err(Error::Parse(format!("unknown feature `{other}`"))),
        }
    }
}

/// One patch row of a cohort.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub subject_id: String,
    pub status: Status,
    /// 1 to 5.
    pub patch: u8,
    pub hd: f64,
    pub hh: f64,
    pub hv: f64,
}

impl SampleRecord {
    pub fn new(subject_id: impl Into<String>, status: Status, patch: u8, h: DirectionalHurst) -> Result<Self> {
        if !(1..=5).contains(&patch) {
            return Err(Error::InvalidParameter(format!("patch index {patch} outside 1..=5")));
        }
        Ok(SampleRecord {
            subject_id: subject_id.into(),
            status,
            patch,
            hd: h.d,
            hh: h.h,
            hv: h.v,
        })
    }

    pub fn feature(&self, f: Feature) -> f64 {
        match f {
            Feature::Hd => self.hd,
            Feature::Hh => self.hh,
            Feature::Hv => self.hv,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionalHurst {
    pub d: f64,
    pub h: f64,
    pub v: f64,
}

/// Transform, spectrum and estimate for each of the three directions.
pub fn image_hurst(patch: &Grid2D, filter: &WaveletFilter, levels: LevelRange, method: Method) -> Result<DirectionalHurst> {
    let decomp = Decomposition::TwoD(dwt2d(patch, filter, levels.first)?);
    let est = |direction: Direction| -> Result<f64> {
        let spectrum = level_energies(&decomp, direction, levels)?;
        Ok(estimate(&spectrum, method)?.hurst)
    };
    Ok(DirectionalHurst {
        d: est(Direction::Diagonal)?,
        h: est(Direction::Horizontal)?,
        v: est(Direction::Vertical)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterName;
    use crate::synthesis::{synth_fbf_2d, SynthesisSpec};

    #[test]
    fn constant_patch_is_degenerate() {
        let patch = Grid2D::from_fn(64, |_| 7.0).unwrap();
        let r = image_hurst(&patch, &WaveletFilter::new(FilterName::Haar), LevelRange::new(2, 5).unwrap(), Method::Tt);
        assert!(matches!(r, Err(Error::DegenerateLevel { .. })));
    }

    #[test]
    fn transpose_swaps_h_and_v() {
        let patch = synth_fbf_2d(&SynthesisSpec::new(0.4, 2, 64, 3)).unwrap();
        let f = WaveletFilter::new(FilterName::Symmlet8);
        let levels = LevelRange::new(2, 5).unwrap();
        for method in Method::ALL {
            let a = image_hurst(&patch, &f, levels, method).unwrap();
            let b = image_hurst(&patch.transpose(), &f, levels, method).unwrap();
            assert!((a.h - b.v).abs() < 1e-12 && (a.v - b.h).abs() < 1e-12);
            assert!((a.d - b.d).abs() < 1e-12);
        }
    }

    #[test]
    fn record_patch_bounds() {
        let h = DirectionalHurst { d: 0.5, h: 0.5, v: 0.5 };
        assert!(SampleRecord::new("a", Status::Normal, 0, h).is_err());
        assert!(SampleRecord::new("a", Status::Normal, 6, h).is_err());
        assert!(SampleRecord::new("a", Status::Normal, 5, h).is_ok());
        assert_eq!(Feature::parse_list("hd,hh").unwrap(), vec![Feature::Hd, Feature::Hh]);
    }
}
