//! Orthonormal wavelet filter banks.
//!
//! Each filter is stored as its low-pass (scaling) taps `h`; the high-pass
//! taps follow the quadrature-mirror rule `g[k] = (-1)^k h[L-1-k]`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DAUB6: [f64; 6] = [
    0.33267055295008263,
    0.8068915093110925,
    0.45987750211849154,
    -0.13501102001025458,
    -0.08544127388202666,
    0.03522629188570953,
];

// Coiflet with four vanishing wavelet moments (12 taps).
const COIFLET4: [f64; 12] = [
    0.01638733646320364,
    -0.04146493678687178,
    -0.0673725547237256,
    0.3861100668227629,
    0.8127236354494135,
    0.4170051844232391,
    -0.07648859907828076,
    -0.05943441864643109,
    0.02368017194684777,
    0.005611434819368834,
    -0.0018232088709110323,
    -0.000720549445520347,
];

// Least-asymmetric Daubechies, 8 taps.
const SYMMLET8: [f64; 8] = [
    0.032223100604051466,
    -0.012603967262031304,
    -0.09921954357663353,
    0.29785779560530606,
    0.8037387518051321,
    0.497618667632775,
    -0.029635527646002493,
    -0.07576571478950221,
];

/// Supported filter families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterName {
    Haar,
    Daub6,
    Coiflet4,
    Symmlet8,
}

impl FilterName {
    pub const ALL: [FilterName; 4] = [
        FilterName::Haar,
        FilterName::Daub6,
        FilterName::Coiflet4,
        FilterName::Symmlet8,
    ];

    /// Short name used on the command line and in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            FilterName::Haar => "haar",
            FilterName::Daub6 => "daub6",
            FilterName::Coiflet4 => "coif4",
            FilterName::Symmlet8 => "sym8",
        }
    }
}

impl fmt::Display for FilterName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "haar" => Ok(FilterName::Haar),
            "daub6" | "db3" => Ok(FilterName::Daub6),
            "coif4" | "coiflet4" => Ok(FilterName::Coiflet4),
            "sym8" | "symmlet8" => Ok(FilterName::Symmlet8),
            _ => Err(Error::UnsupportedFilter(s.to_string())),
        }
    }
}

/// A low-pass/high-pass pair of an orthonormal wavelet.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletFilter {
    pub name: FilterName,
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
    pub vanishing_moments: usize,
}

impl WaveletFilter {
    pub fn new(name: FilterName) -> Self {
        let (taps, moments): (&[f64], usize) = match name {
            FilterName::Haar => (&HAAR, 1),
            FilterName::Daub6 => (&DAUB6, 3),
            FilterName::Coiflet4 => (&COIFLET4, 4),
            FilterName::Symmlet8 => (&SYMMLET8, 4),
        };
        let lowpass = taps.to_vec();
        let highpass = quadrature_mirror(&lowpass);
        WaveletFilter {
            name,
            lowpass,
            highpass,
            vanishing_moments: moments,
        }
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    /// Checks the sum, orthonormality and moment conditions of the taps.
    pub fn validate(&self) -> Result<()> {
        let h = &self.lowpass;
        let g = &self.highpass;
        let sum: f64 = h.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "{}: lowpass sums to {sum}",
                self.name
            )));
        }
        for shift in 0..h.len().div_ceil(2) {
            let dot: f64 = (0..h.len() - 2 * shift)
                .map(|k| h[k] * h[k + 2 * shift])
                .sum();
            let target = if shift == 0 { 1.0 } else { 0.0 };
            if (dot - target).abs() > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "{}: autocorrelation at shift {} is {dot}",
                    self.name,
                    2 * shift
                )));
            }
        }
        let gsum: f64 = g.iter().sum();
        if gsum.abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "{}: highpass sums to {gsum}",
                self.name
            )));
        }
        for p in 0..self.vanishing_moments {
            let moment: f64 = g
                .iter()
                .enumerate()
                .map(|(k, gk)| (k as f64).powi(p as i32) * gk)
                .sum();
            if moment.abs() > 1e-8 {
                return Err(Error::InvalidParameter(format!(
                    "{}: moment {p} of highpass is {moment}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Builds a validated filter by name.
pub fn make_filter(name: &str) -> Result<WaveletFilter> {
    let filter = WaveletFilter::new(name.parse()?);
    filter.validate()?;
    Ok(filter)
}

fn quadrature_mirror(lowpass: &[f64]) -> Vec<f64> {
    let len = lowpass.len();
    (0..len)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * lowpass[len - 1 - k]
        })
        .collect()
}
