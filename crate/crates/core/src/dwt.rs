//! Periodic orthonormal discrete wavelet transforms in one and two dimensions.
//!
//! A signal of length `2^J` (or an image of side `2^J`) is decomposed by the
//! Mallat cascade down to a coarsest level `J0`. Level `j` holds `2^j`
//! coefficients per axis, so the finest detail level is `J-1`.
//!
//! In 2-D the column index is the first tensor coordinate and the row index
//! the second, giving
//!
//! * `h`: low-pass along columns, high-pass along rows,
//! * `v`: high-pass along columns, low-pass along rows,
//! * `d`: high-pass along both.
//!
//! Transposing an image therefore swaps its `h` and `v` subbands.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayViewMut1};

use crate::error::{Error, Result};
use crate::filter::WaveletFilter;

/// Detail hierarchy of a decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Horizontal,
    Vertical,
    Diagonal,
    /// The single detail band of a 1-D transform.
    Series,
}

impl Direction {
    pub const PLANAR: [Direction; 3] = [Direction::Horizontal, Direction::Vertical, Direction::Diagonal];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Horizontal => "h",
            Direction::Vertical => "v",
            Direction::Diagonal => "d",
            Direction::Series => "1d",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "h" | "horizontal" => Ok(Direction::Horizontal),
            "v" | "vertical" => Ok(Direction::Vertical),
            "d" | "diagonal" => Ok(Direction::Diagonal),
            "1d" | "s" | "series" => Ok(Direction::Series),
            other => Err(Error::Parse(format!("unknown direction `{other}`"))),
        }
    }
}

/// Square image with power-of-two side.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    samples: Array2<f64>,
}

impl Grid2D {
    pub fn new(samples: Array2<f64>) -> Result<Self> {
        let (rows, cols) = samples.dim();
        if rows != cols {
            return Err(Error::InvalidShape(format!("grid must be square, got {rows}x{cols}")));
        }
        if rows < 2 || !rows.is_power_of_two() {
            return Err(Error::InvalidShape(format!(
                "grid side must be a power of two >= 2, got {rows}"
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidShape("grid contains non-finite samples".into()));
        }
        Ok(Grid2D { samples })
    }

    pub fn from_fn(side: usize, f: impl FnMut((usize, usize)) -> f64) -> Result<Self> {
        Grid2D::new(Array2::from_shape_fn((side, side), f))
    }

    pub fn side(&self) -> usize {
        self.samples.nrows()
    }

    /// `J` such that `side == 2^J`.
    pub fn levels(&self) -> usize {
        self.side().trailing_zeros() as usize
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn into_samples(self) -> Array2<f64> {
        self.samples
    }

    pub fn transpose(&self) -> Grid2D {
        Grid2D {
            samples: self.samples.t().to_owned(),
        }
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    /// Subtracts the sample mean.
    pub fn centered(&self) -> Grid2D {
        let mean = self.samples.mean().unwrap_or(0.0);
        Grid2D {
            samples: self.samples.mapv(|v| v - mean),
        }
    }
}

/// Result of [`dwt1d`].
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition1D {
    pub coarsest_level: usize,
    /// `details[i]` is level `coarsest_level + i`, with `2^level` entries.
    pub details: Vec<Vec<f64>>,
    pub approx: Vec<f64>,
}

/// The three detail subbands of one 2-D level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelBands {
    pub h: Array2<f64>,
    pub v: Array2<f64>,
    pub d: Array2<f64>,
}

impl LevelBands {
    pub fn get(&self, direction: Direction) -> Option<&Array2<f64>> {
        match direction {
            Direction::Horizontal => Some(&self.h),
            Direction::Vertical => Some(&self.v),
            Direction::Diagonal => Some(&self.d),
            Direction::Series => None,
        }
    }

    pub fn get_mut(&mut self, direction: Direction) -> Option<&mut Array2<f64>> {
        match direction {
            Direction::Horizontal => Some(&mut self.h),
            Direction::Vertical => Some(&mut self.v),
            Direction::Diagonal => Some(&mut self.d),
            Direction::Series => None,
        }
    }
}

/// Result of [`dwt2d`].
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition2D {
    pub coarsest_level: usize,
    /// `levels[i]` is level `coarsest_level + i`, each band `2^level` square.
    pub levels: Vec<LevelBands>,
    pub approx: Array2<f64>,
}

/// Either kind of decomposition, for code that is generic in the dimension.
#[derive(Clone, Debug, PartialEq)]
pub enum Decomposition {
    OneD(Decomposition1D),
    TwoD(Decomposition2D),
}

impl Decomposition {
    pub fn dimension(&self) -> usize {
        match self {
            Decomposition::OneD(_) => 1,
            Decomposition::TwoD(_) => 2,
        }
    }

    pub fn coarsest_level(&self) -> usize {
        match self {
            Decomposition::OneD(d) => d.coarsest_level,
            Decomposition::TwoD(d) => d.coarsest_level,
        }
    }

    /// Finest detail level (`J-1`).
    pub fn finest_level(&self) -> usize {
        match self {
            Decomposition::OneD(d) => d.coarsest_level + d.details.len() - 1,
            Decomposition::TwoD(d) => d.coarsest_level + d.levels.len() - 1,
        }
    }

    pub fn directions(&self) -> &'static [Direction] {
        match self {
            Decomposition::OneD(_) => &[Direction::Series],
            Decomposition::TwoD(_) => &Direction::PLANAR,
        }
    }

    fn check(&self, direction: Direction, level: usize) -> Result<usize> {
        if !self.directions().contains(&direction) {
            return Err(Error::InvalidParameter(format!(
                "direction {direction} does not exist in a {}-D decomposition",
                self.dimension()
            )));
        }
        if level < self.coarsest_level() || level > self.finest_level() {
            return Err(Error::InvalidLevelRange(format!(
                "level {level} outside [{}, {}]",
                self.coarsest_level(),
                self.finest_level()
            )));
        }
        Ok(level - self.coarsest_level())
    }

    /// Coefficients of one detail subband, in row-major order for 2-D.
    pub fn band(&self, direction: Direction, level: usize) -> Result<&[f64]> {
        let idx = self.check(direction, level)?;
        Ok(match self {
            Decomposition::OneD(d) => &d.details[idx],
            Decomposition::TwoD(d) => d.levels[idx]
                .get(direction)
                .and_then(|band| band.as_slice())
                .expect("subbands are standard layout"),
        })
    }

    pub fn band_mut(&mut self, direction: Direction, level: usize) -> Result<&mut [f64]> {
        let idx = self.check(direction, level)?;
        Ok(match self {
            Decomposition::OneD(d) => &mut d.details[idx],
            Decomposition::TwoD(d) => d.levels[idx]
                .get_mut(direction)
                .and_then(|band| band.as_slice_mut())
                .expect("subbands are standard layout"),
        })
    }

    /// Sum of squares over every subband and the approximation.
    pub fn energy(&self) -> f64 {
        fn sq<'a>(it: impl Iterator<Item = &'a f64>) -> f64 {
            it.map(|v| v * v).sum()
        }
        match self {
            Decomposition::OneD(d) => sq(d.approx.iter()) + d.details.iter().map(|b| sq(b.iter())).sum::<f64>(),
            Decomposition::TwoD(d) => {
                sq(d.approx.iter())
                    + d.levels
                        .iter()
                        .map(|l| sq(l.h.iter()) + sq(l.v.iter()) + sq(l.d.iter()))
                        .sum::<f64>()
            }
        }
    }
}

/// One analysis step with periodic wrap: `input.len()` must be even.
fn analysis_step(filter: &WaveletFilter, input: ArrayView1<f64>, approx: &mut [f64], detail: &mut [f64]) {
    let n = input.len();
    let half = n / 2;
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (tap, (h, g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            let x = input[(2 * k + tap) % n];
            a += h * x;
            d += g * x;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

/// Inverse of [`analysis_step`]; `output` has twice the length of the inputs.
fn synthesis_step(filter: &WaveletFilter, approx: &[f64], detail: &[f64], mut output: ArrayViewMut1<f64>) {
    let n = output.len();
    output.fill(0.0);
    for k in 0..approx.len() {
        for (tap, (h, g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            output[(2 * k + tap) % n] += h * approx[k] + g * detail[k];
        }
    }
}

fn check_levels(len: usize, coarsest_level: usize, what: &str) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidShape(format!(
            "{what} length must be a power of two >= 2, got {len}"
        )));
    }
    let levels = len.trailing_zeros() as usize;
    if coarsest_level >= levels {
        return Err(Error::InvalidLevelRange(format!(
            "coarsest level {coarsest_level} must be below {levels}"
        )));
    }
    Ok(levels)
}

/// Forward periodic DWT of a power-of-two length signal.
pub fn dwt1d(signal: &[f64], filter: &WaveletFilter, coarsest_level: usize) -> Result<Decomposition1D> {
    let levels = check_levels(signal.len(), coarsest_level, "signal")?;
    let mut current = signal.to_vec();
    let mut details = Vec::with_capacity(levels - coarsest_level);
    for level in (coarsest_level..levels).rev() {
        let half = 1usize << level;
        let mut approx = vec![0.0; half];
        let mut detail = vec![0.0; half];
        analysis_step(filter, ArrayView1::from(&current[..]), &mut approx, &mut detail);
        details.push(detail);
        current = approx;
    }
    details.reverse();
    Ok(Decomposition1D {
        coarsest_level,
        details,
        approx: current,
    })
}

/// Inverse of [`dwt1d`].
pub fn idwt1d(decomp: &Decomposition1D, filter: &WaveletFilter) -> Result<Vec<f64>> {
    if decomp.approx.len() != 1 << decomp.coarsest_level {
        return Err(Error::InvalidShape(format!(
            "approximation has {} entries, expected {}",
            decomp.approx.len(),
            1usize << decomp.coarsest_level
        )));
    }
    let mut current = decomp.approx.clone();
    for (i, detail) in decomp.details.iter().enumerate() {
        let level = decomp.coarsest_level + i;
        if detail.len() != 1 << level {
            return Err(Error::InvalidShape(format!(
                "level {level} has {} coefficients, expected {}",
                detail.len(),
                1usize << level
            )));
        }
        let mut next = vec![0.0; 2 * current.len()];
        synthesis_step(filter, &current, detail, ArrayViewMut1::from(&mut next[..]));
        current = next;
    }
    Ok(current)
}

/// Forward separable periodic DWT of a square image.
pub fn dwt2d(grid: &Grid2D, filter: &WaveletFilter, coarsest_level: usize) -> Result<Decomposition2D> {
    let levels = check_levels(grid.side(), coarsest_level, "grid side")?;
    let mut current = grid.samples().clone();
    let mut bands = Vec::with_capacity(levels - coarsest_level);
    for level in (coarsest_level..levels).rev() {
        let n = 2usize << level;
        let half = n / 2;

        // filter along each row (column index varies)
        let mut low_x = Array2::zeros((n, half));
        let mut high_x = Array2::zeros((n, half));
        let mut a = vec![0.0; half];
        let mut d = vec![0.0; half];
        for r in 0..n {
            analysis_step(filter, current.row(r), &mut a, &mut d);
            low_x.row_mut(r).assign(&ArrayView1::from(&a[..]));
            high_x.row_mut(r).assign(&ArrayView1::from(&d[..]));
        }

        // then along each column (row index varies)
        let split_columns = |m: &Array2<f64>| {
            let mut lo = Array2::zeros((half, half));
            let mut hi = Array2::zeros((half, half));
            let mut a = vec![0.0; half];
            let mut d = vec![0.0; half];
            for c in 0..half {
                analysis_step(filter, m.column(c), &mut a, &mut d);
                lo.column_mut(c).assign(&ArrayView1::from(&a[..]));
                hi.column_mut(c).assign(&ArrayView1::from(&d[..]));
            }
            (lo, hi)
        };
        let (approx, h) = split_columns(&low_x);
        let (v, dd) = split_columns(&high_x);
        bands.push(LevelBands { h, v, d: dd });
        current = approx;
    }
    bands.reverse();
    Ok(Decomposition2D {
        coarsest_level,
        levels: bands,
        approx: current,
    })
}

/// Inverse of [`dwt2d`].
pub fn idwt2d(decomp: &Decomposition2D, filter: &WaveletFilter) -> Result<Grid2D> {
    let base = 1usize << decomp.coarsest_level;
    if decomp.approx.dim() != (base, base) {
        return Err(Error::InvalidShape(format!(
            "approximation is {:?}, expected {base}x{base}",
            decomp.approx.dim()
        )));
    }
    let mut current = decomp.approx.clone();
    for (i, bands) in decomp.levels.iter().enumerate() {
        let half = base << i;
        for band in [&bands.h, &bands.v, &bands.d] {
            if band.dim() != (half, half) {
                return Err(Error::InvalidShape(format!(
                    "level {} subband is {:?}, expected {half}x{half}",
                    decomp.coarsest_level + i,
                    band.dim()
                )));
            }
        }
        let n = 2 * half;
        let merge_columns = |lo: &Array2<f64>, hi: &Array2<f64>| {
            let mut out = Array2::zeros((n, half));
            for c in 0..half {
                let a = lo.column(c).to_vec();
                let d = hi.column(c).to_vec();
                synthesis_step(filter, &a, &d, out.column_mut(c));
            }
            out
        };
        let low_x = merge_columns(&current, &bands.h);
        let high_x = merge_columns(&bands.v, &bands.d);
        let mut out = Array2::zeros((n, n));
        for r in 0..n {
            let a = low_x.row(r).to_vec();
            let d = high_x.row(r).to_vec();
            synthesis_step(filter, &a, &d, out.row_mut(r));
        }
        current = out;
    }
    Grid2D::new(current)
}

/// Transposes every subband and swaps `h` with `v`; matches transposing the input.
pub fn transpose_decomposition(decomp: &Decomposition2D) -> Decomposition2D {
    Decomposition2D {
        coarsest_level: decomp.coarsest_level,
        levels: decomp
            .levels
            .iter()
            .map(|l| LevelBands {
                h: l.v.t().to_owned(),
                v: l.h.t().to_owned(),
                d: l.d.t().to_owned(),
            })
            .collect(),
        approx: decomp.approx.t().to_owned(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterName;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn filters() -> Vec<WaveletFilter> {
        FilterName::ALL.iter().map(|&n| WaveletFilter::new(n)).collect()
    }

    fn random_grid(side: usize, seed: u64) -> Grid2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Grid2D::from_fn(side, |_| rng.random_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn constant_signal_has_zero_details() {
        for f in filters() {
            let dec = dwt1d(&[3.5; 64], &f, 0).unwrap();
            for band in &dec.details {
                assert!(band.iter().all(|v| v.abs() < 1e-12), "{}", f.name);
            }
        }
    }

    #[test]
    fn haar_two_samples() {
        let f = WaveletFilter::new(FilterName::Haar);
        let dec = dwt1d(&[1.0, 0.0], &f, 0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((dec.approx[0] - s).abs() < 1e-15);
        assert!((dec.details[0][0] - s).abs() < 1e-15);
    }

    #[test]
    fn constant_grid_has_zero_details() {
        let grid = Grid2D::from_fn(32, |_| 2.0).unwrap();
        for f in filters() {
            let dec = dwt2d(&grid, &f, 1).unwrap();
            for l in &dec.levels {
                for band in [&l.h, &l.v, &l.d] {
                    assert!(band.iter().all(|v| v.abs() < 1e-12));
                }
            }
            let e: f64 = dec.approx.iter().map(|v| v * v).sum();
            assert!((e - grid.energy()).abs() < 1e-9);
        }
    }

    #[test]
    fn haar_2x2_matches_tensor_atoms() {
        // inner products with phi(x)phi(y), phi(x)psi(y), psi(x)phi(y), psi(x)psi(y)
        let grid = Grid2D::new(ndarray::arr2(&[[1.0, 0.0], [0.0, 0.0]])).unwrap();
        let dec = dwt2d(&grid, &WaveletFilter::new(FilterName::Haar), 0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let phi = [s, s];
        let psi = [s, -s];
        let atom = |fx: [f64; 2], fy: [f64; 2]| -> f64 {
            let mut acc = 0.0;
            for r in 0..2 {
                for c in 0..2 {
                    acc += grid.samples()[(r, c)] * fx[c] * fy[r];
                }
            }
            acc
        };
        assert!((dec.approx[(0, 0)] - atom(phi, phi)).abs() < 1e-15);
        assert!((dec.levels[0].h[(0, 0)] - atom(phi, psi)).abs() < 1e-15);
        assert!((dec.levels[0].v[(0, 0)] - atom(psi, phi)).abs() < 1e-15);
        assert!((dec.levels[0].d[(0, 0)] - atom(psi, psi)).abs() < 1e-15);
        for v in [dec.approx[(0, 0)], dec.levels[0].h[(0, 0)], dec.levels[0].v[(0, 0)], dec.levels[0].d[(0, 0)]] {
            assert!((v.abs() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn level_cardinality() {
        let grid = random_grid(64, 1);
        let dec = dwt2d(&grid, &WaveletFilter::new(FilterName::Daub6), 2).unwrap();
        for (i, l) in dec.levels.iter().enumerate() {
            let j = 2 + i;
            assert_eq!(l.d.len(), 1 << (2 * j));
        }
        assert_eq!(dec.levels.len(), 4);
        let sig: Vec<f64> = grid.samples().iter().copied().take(256).collect();
        let d1 = dwt1d(&sig, &WaveletFilter::new(FilterName::Haar), 3).unwrap();
        for (i, b) in d1.details.iter().enumerate() {
            assert_eq!(b.len(), 1 << (3 + i));
        }
    }

    #[test]
    fn round_trip_2d_all_filters() {
        let grid = random_grid(64, 7);
        for f in filters() {
            let dec = dwt2d(&grid, &f, 0).unwrap();
            let back = idwt2d(&dec, &f).unwrap();
            let err = (back.samples() - grid.samples()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err < 1e-10, "{}: {err}", f.name);
        }
    }

    #[test]
    fn round_trip_1d_all_filters() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sig: Vec<f64> = (0..512).map(|_| rng.random_range(-1.0..1.0)).collect();
        for f in filters() {
            let dec = dwt1d(&sig, &f, 0).unwrap();
            let back = idwt1d(&dec, &f).unwrap();
            let err = back.iter().zip(&sig).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-10, "{}: {err}", f.name);
        }
    }

    #[test]
    fn zero_decomposition_inverts_to_zero() {
        let f = WaveletFilter::new(FilterName::Symmlet8);
        let zero = Grid2D::from_fn(16, |_| 0.0).unwrap();
        let dec = dwt2d(&zero, &f, 1).unwrap();
        let back = idwt2d(&dec, &f).unwrap();
        assert!(back.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_diagonal_coefficient_synthesizes_tensor_atom() {
        // oracle: periodized atom built directly from the 1-D cascade
        let f = WaveletFilter::new(FilterName::Daub6);
        let side = 32;
        let level = 3;
        let (kr, kc) = (2, 5);
        let grid = Grid2D::from_fn(side, |_| 0.0).unwrap();
        let mut dec = dwt2d(&grid, &f, 1).unwrap();
        dec.levels[level - 1].d[(kr, kc)] = 1.0;
        let out = idwt2d(&dec, &f).unwrap();

        let atom_1d = |k: usize| {
            let mut d1 = dwt1d(&vec![0.0; side], &f, 1).unwrap();
            d1.details[level - 1][k] = 1.0;
            idwt1d(&d1, &f).unwrap()
        };
        let psi_x = atom_1d(kc);
        let psi_y = atom_1d(kr);
        for r in 0..side {
            for c in 0..side {
                assert!((out.samples()[(r, c)] - psi_x[c] * psi_y[r]).abs() < 1e-12);
            }
        }
        assert!((out.energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transpose_swaps_h_and_v() {
        let grid = random_grid(32, 11);
        let f = WaveletFilter::new(FilterName::Coiflet4);
        let a = dwt2d(&grid, &f, 0).unwrap();
        let b = dwt2d(&grid.transpose(), &f, 0).unwrap();
        let t = transpose_decomposition(&a);
        for (x, y) in t.levels.iter().zip(&b.levels) {
            for (p, q) in [(&x.h, &y.h), (&x.v, &y.v), (&x.d, &y.d)] {
                let err = (p - q).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(err < 1e-12);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let f = WaveletFilter::new(FilterName::Haar);
        assert!(matches!(dwt1d(&[0.0; 12], &f, 0), Err(Error::InvalidShape(_))));
        assert!(matches!(dwt1d(&[0.0; 16], &f, 4), Err(Error::InvalidLevelRange(_))));
        assert!(matches!(
            Grid2D::new(Array2::zeros((6, 6))),
            Err(Error::InvalidShape(_))
        ));
        let grid = random_grid(8, 0);
        assert!(matches!(dwt2d(&grid, &f, 3), Err(Error::InvalidLevelRange(_))));
        let mut dec = dwt2d(&grid, &f, 1).unwrap();
        dec.levels[0].h = Array2::zeros((3, 3));
        assert!(matches!(idwt2d(&dec, &f), Err(Error::InvalidShape(_))));
    }
}
