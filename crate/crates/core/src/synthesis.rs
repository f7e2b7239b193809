//! Exact simulation of fractional Brownian motion and fields.
//!
//! Both generators sample `B_H` on the lattice `{0, 1/n, ..., (n-1)/n}` (per
//! axis) with `B_H(0) = 0` and covariance
//! `(sigma^2 / 2) (|t|^{2H} + |s|^{2H} - |t - s|^{2H})`.
//!
//! * 1-D: circulant embedding of fractional Gaussian noise followed by a
//!   cumulative sum.
//! * 2-D: circulant embedding of Stein's compactly supported stationary
//!   covariance whose increments match the fBf variogram within unit
//!   distance, plus a random linear term. A dense Cholesky factorization of
//!   the exact covariance is available for small sides.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::dwt::{Decomposition, Direction, Grid2D};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// Largest side handled by the dense Cholesky generator.
pub const CHOLESKY_MAX_SIDE: usize = 32;

// relative tolerance for round-off negative eigenvalues of an embedding
const EIGEN_TOLERANCE: f64 = 1e-9;

/// Parameters of one synthesized realization.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisSpec {
    pub hurst: f64,
    /// 1 for a series, 2 for a square field.
    pub dimension: usize,
    /// Series length or field side; a power of two.
    pub size: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl SynthesisSpec {
    pub fn new(hurst: f64, dimension: usize, size: usize, seed: u64) -> Self {
        SynthesisSpec {
            hurst,
            dimension,
            size,
            sigma: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_hurst(self.hurst)?;
        if !(self.dimension == 1 || self.dimension == 2) {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1 or 2, got {}",
                self.dimension
            )));
        }
        if self.size < 2 || !self.size.is_power_of_two() {
            return Err(Error::InvalidShape(format!(
                "size must be a power of two >= 2, got {}",
                self.size
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// How a 2-D field is generated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FieldMethod {
    /// Circulant embedding, falling back to Cholesky for small sides.
    #[default]
    Auto,
    CirculantEmbedding,
    Cholesky,
}

fn check_hurst(hurst: f64) -> Result<()> {
    if hurst > 0.0 && hurst < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidHurst(hurst))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Covariance of fractional Brownian motion between points `t` and `s`.
pub fn fbm_cov(t: &[f64], s: &[f64], hurst: f64, sigma: f64) -> Result<f64> {
    check_hurst(hurst)?;
    if t.len() != s.len() {
        return Err(Error::InvalidShape(format!(
            "points have dimensions {} and {}",
            t.len(),
            s.len()
        )));
    }
    let diff: Vec<f64> = t.iter().zip(s).map(|(a, b)| a - b).collect();
    let e = 2.0 * hurst;
    Ok(0.5 * sigma * sigma * (norm(t).powf(e) + norm(s).powf(e) - norm(&diff).powf(e)))
}

/// Autocovariance of unit-spacing fractional Gaussian noise at lag `k`.
fn fgn_autocov(k: usize, hurst: f64) -> f64 {
    let e = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

fn clip_eigenvalues(eig: &mut [f64]) -> Result<()> {
    let max = eig.iter().cloned().fold(0.0f64, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -EIGEN_TOLERANCE * max {
        return Err(Error::EmbeddingFailure(format!(
            "embedding has negative eigenvalue {min:.3e} (largest {max:.3e})"
        )));
    }
    for v in eig.iter_mut() {
        *v = v.max(0.0);
    }
    Ok(())
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// 1-D fBm with the spec's own seed.
pub fn synth_fbm_1d(spec: &SynthesisSpec) -> Result<Vec<f64>> {
    let mut rng = rng::stream(spec.seed, Purpose::Synthesis, 0, 0);
    synth_fbm_1d_with(spec, &mut rng)
}

/// 1-D fBm drawing from a caller-supplied generator.
pub fn synth_fbm_1d_with<R: Rng + ?Sized>(spec: &SynthesisSpec, rng: &mut R) -> Result<Vec<f64>> {
    if spec.dimension != 1 {
        return Err(Error::InvalidParameter("synth_fbm_1d needs dimension 1".into()));
    }
    FractionalSampler::new(spec, FieldMethod::Auto)?.sample_series(rng)
}

/// 2-D fBf with the spec's own seed.
pub fn synth_fbf_2d(spec: &SynthesisSpec) -> Result<Grid2D> {
    let mut rng = rng::stream(spec.seed, Purpose::Synthesis, 0, 0);
    synth_fbf_2d_with(spec, FieldMethod::Auto, &mut rng)
}

/// 2-D fBf drawing from a caller-supplied generator.
pub fn synth_fbf_2d_with<R: Rng + ?Sized>(
    spec: &SynthesisSpec,
    method: FieldMethod,
    rng: &mut R,
) -> Result<Grid2D> {
    if spec.dimension != 2 {
        return Err(Error::InvalidParameter("synth_fbf_2d needs dimension 2".into()));
    }
    FractionalSampler::new(spec, method)?.sample_field(rng)
}

/// Precomputed generator for repeated draws with the same `(H, size, sigma)`.
///
/// Building the sampler does the expensive eigen-decomposition or Cholesky
/// factorization once; each draw then costs one FFT or one triangular
/// product. The spec's seed is ignored; randomness comes from the generator
/// passed to each draw.
pub struct FractionalSampler {
    hurst: f64,
    size: usize,
    sigma: f64,
    inner: SamplerKind,
}

enum SamplerKind {
    Series {
        fft: Arc<dyn Fft<f64>>,
        /// `sqrt(lambda / m)` for each circulant eigenvalue.
        amplitude: Vec<f64>,
    },
    Stein {
        fft2: Fft2,
        torus: usize,
        amplitude: Vec<f64>,
        c2: f64,
    },
    Cholesky {
        lower: DMatrix<f64>,
    },
}

impl FractionalSampler {
    pub fn new(spec: &SynthesisSpec, method: FieldMethod) -> Result<Self> {
        spec.validate()?;
        let inner = if spec.dimension == 1 {
            series_sampler(spec)?
        } else {
            match method {
                FieldMethod::CirculantEmbedding => stein_sampler(spec)?,
                FieldMethod::Cholesky => cholesky_sampler(spec)?,
                FieldMethod::Auto => match stein_sampler(spec) {
                    Err(Error::EmbeddingFailure(_)) if spec.size <= CHOLESKY_MAX_SIDE => cholesky_sampler(spec)?,
                    other => other?,
                },
            }
        };
        Ok(FractionalSampler {
            hurst: spec.hurst,
            size: spec.size,
            sigma: spec.sigma,
            inner,
        })
    }

    pub fn dimension(&self) -> usize {
        match self.inner {
            SamplerKind::Series { .. } => 1,
            _ => 2,
        }
    }

    pub fn sample_series<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let SamplerKind::Series { fft, amplitude } = &self.inner else {
            return Err(Error::InvalidParameter("sampler does not produce series".into()));
        };
        let n = self.size;
        let mut buf: Vec<Complex64> = amplitude.iter().map(|&a| complex_gaussian(rng) * a).collect();
        fft.process(&mut buf);
        // increments on spacing 1/n
        let step = self.sigma * (n as f64).powf(-self.hurst);
        let mut out = Vec::with_capacity(n);
        let mut acc = 0.0;
        out.push(0.0);
        for z in buf.iter().take(n - 1) {
            acc += z.re * step;
            out.push(acc);
        }
        Ok(out)
    }

    pub fn sample_field<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Grid2D> {
        let n = self.size;
        match &self.inner {
            SamplerKind::Series { .. } => Err(Error::InvalidParameter("sampler does not produce fields".into())),
            SamplerKind::Stein {
                fft2,
                torus,
                amplitude,
                c2,
            } => {
                let torus = *torus;
                let mut buf: Vec<Complex64> = amplitude.iter().map(|&a| complex_gaussian(rng) * a).collect();
                fft2.process(&mut buf);
                let slope_x: f64 = rng.sample(StandardNormal);
                let slope_y: f64 = rng.sample(StandardNormal);
                let delta = stein_spacing(n);
                let linear = (2.0 * c2).sqrt();
                let origin = buf[0].re;
                // variogram of the sum is 2 r^{2H}; rescale to sigma and to spacing 1/n
                let gain = self.sigma * 2f64.powf(self.hurst) / 2f64.sqrt();
                let samples = Array2::from_shape_fn((n, n), |(r, c)| {
                    let stationary = buf[r * torus + c].re - origin;
                    let tilt = linear * (slope_x * c as f64 + slope_y * r as f64) * delta;
                    gain * (stationary + tilt)
                });
                Grid2D::new(samples)
            }
            SamplerKind::Cholesky { lower } => {
                let z = DVector::from_fn(lower.nrows(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let x = lower * z;
                let mut samples = Array2::zeros((n, n));
                for (i, v) in x.iter().enumerate() {
                    let idx = i + 1;
                    samples[(idx / n, idx % n)] = *v;
                }
                Grid2D::new(samples)
            }
        }
    }
}

fn series_sampler(spec: &SynthesisSpec) -> Result<SamplerKind> {
    let n = spec.size;
    let m = 2 * n;
    // first row of the circulant: lags 0..=n then back down to 1
    let mut row: Vec<Complex64> = (0..m)
        .map(|i| {
            let lag = if i <= n { i } else { m - i };
            Complex64::new(fgn_autocov(lag, spec.hurst), 0.0)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut row);
    let mut eig: Vec<f64> = row.iter().map(|c| c.re).collect();
    clip_eigenvalues(&mut eig)?;
    let scale = 1.0 / m as f64;
    Ok(SamplerKind::Series {
        fft,
        amplitude: eig.iter().map(|&l| (l * scale).sqrt()).collect(),
    })
}

/// Stein's stationary covariance on `[0, R]`, with `alpha = 2H`.
#[derive(Clone, Copy, Debug)]
struct SteinKernel {
    alpha: f64,
    support: f64,
    beta: f64,
    c0: f64,
    c2: f64,
}

impl SteinKernel {
    fn new(hurst: f64) -> Self {
        let alpha = 2.0 * hurst;
        if alpha <= 1.5 {
            SteinKernel {
                alpha,
                support: 1.0,
                beta: 0.0,
                c0: 1.0 - alpha / 2.0,
                c2: alpha / 2.0,
            }
        } else {
            let r: f64 = 2.0;
            let beta = alpha * (2.0 - alpha) / (3.0 * r * (r * r - 1.0));
            let c2 = (alpha - beta * (r - 1.0).powi(2) * (r + 2.0)) / 2.0;
            let c0 = beta * (r - 1.0).powi(3) + 1.0 - c2;
            SteinKernel {
                alpha,
                support: r,
                beta,
                c0,
                c2,
            }
        }
    }

    fn eval(&self, r: f64) -> f64 {
        if r <= 1.0 {
            self.c0 - r.powf(self.alpha) + self.c2 * r * r
        } else if r <= self.support {
            self.beta * (self.support - r).powi(3) / r
        } else {
            0.0
        }
    }
}

struct Fft2 {
    size: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(size: usize) -> Self {
        Fft2 {
            size,
            fft: FftPlanner::new().plan_fft_forward(size),
        }
    }

    /// In-place forward 2-D transform of a row-major square buffer.
    fn process(&self, data: &mut [Complex64]) {
        let n = self.size;
        self.fft.process(data);
        transpose_in_place(data, n);
        self.fft.process(data);
        transpose_in_place(data, n);
    }
}

fn transpose_in_place(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

/// Lattice spacing of the Stein simulation, chosen so every pair of the
/// `n x n` output points lies within unit distance.
fn stein_spacing(n: usize) -> f64 {
    1.0 / (2 * n) as f64
}

fn stein_sampler(spec: &SynthesisSpec) -> Result<SamplerKind> {
    let n = spec.size;
    let kernel = SteinKernel::new(spec.hurst);
    let delta = stein_spacing(n);
    // torus of side 2R so each lag has exactly one image inside the support
    let torus = 4 * kernel.support as usize * n;

    let mut cov = vec![Complex64::new(0.0, 0.0); torus * torus];
    for a in 0..torus {
        let da = a.min(torus - a) as f64;
        for b in 0..torus {
            let db = b.min(torus - b) as f64;
            let r = delta * (da * da + db * db).sqrt();
            cov[a * torus + b] = Complex64::new(kernel.eval(r), 0.0);
        }
    }
    let fft2 = Fft2::new(torus);
    fft2.process(&mut cov);
    let mut eig: Vec<f64> = cov.iter().map(|c| c.re).collect();
    drop(cov);
    clip_eigenvalues(&mut eig)?;
    let scale = 1.0 / (torus * torus) as f64;
    Ok(SamplerKind::Stein {
        fft2,
        torus,
        amplitude: eig.iter().map(|&l| (l * scale).sqrt()).collect(),
        c2: kernel.c2,
    })
}

fn cholesky_sampler(spec: &SynthesisSpec) -> Result<SamplerKind> {
    let n = spec.size;
    if n > CHOLESKY_MAX_SIDE {
        return Err(Error::EmbeddingFailure(format!(
            "Cholesky synthesis is limited to side {CHOLESKY_MAX_SIDE}, got {n}"
        )));
    }
    // all lattice points except the pinned origin
    let points: Vec<[f64; 2]> = (1..n * n)
        .map(|i| [(i % n) as f64 / n as f64, (i / n) as f64 / n as f64])
        .collect();
    let dim = points.len();
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..=i {
            let v = fbm_cov(&points[i], &points[j], spec.hurst, spec.sigma)?;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::EmbeddingFailure("covariance is not positive definite".into()))?;
    Ok(SamplerKind::Cholesky { lower: chol.l() })
}


/// Variance of the added noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseScale {
    /// Each targeted subband receives noise with variance equal to its own
    /// mean squared coefficient.
    MatchAverageEnergy,
    Variance(f64),
}

/// Which subbands to contaminate and how.
#[derive(Clone, Debug, PartialEq)]
pub struct ContaminationSpec {
    pub target_level: usize,
    /// Empty means every direction of the decomposition.
    pub directions: Vec<Direction>,
    pub scale: NoiseScale,
    pub seed: u64,
}

impl ContaminationSpec {
    pub fn new(target_level: usize, seed: u64) -> Self {
        ContaminationSpec {
            target_level,
            directions: Vec::new(),
            scale: NoiseScale::MatchAverageEnergy,
            seed,
        }
    }
}

/// Adds white Gaussian noise to the targeted subbands of a decomposition.
pub fn contaminate(decomp: &Decomposition, spec: &ContaminationSpec) -> Result<Decomposition> {
    let mut rng = rng::stream(spec.seed, Purpose::Contamination, 0, 0);
    contaminate_with(decomp, spec, &mut rng)
}

pub fn contaminate_with<R: Rng + ?Sized>(
    decomp: &Decomposition,
    spec: &ContaminationSpec,
    rng: &mut R,
) -> Result<Decomposition> {
    let directions: Vec<Direction> = if spec.directions.is_empty() {
        decomp.directions().to_vec()
    } else {
        spec.directions.clone()
    };
    let mut out = decomp.clone();
    for direction in directions {
        let band = out.band_mut(direction, spec.target_level)?;
        let variance = match spec.scale {
            NoiseScale::MatchAverageEnergy => band.iter().map(|v| v * v).sum::<f64>() / band.len() as f64,
            NoiseScale::Variance(v) if v >= 0.0 && v.is_finite() => v,
            NoiseScale::Variance(v) => {
                return Err(Error::InvalidParameter(format!("noise variance {v} is invalid")))
            }
        };
        if variance == 0.0 {
            continue;
        }
        let sd = variance.sqrt();
        for coef in band.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *coef += sd * e;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dwt::dwt1d;
    use crate::filter::{FilterName, WaveletFilter};

    #[test]
    fn covariance_examples() {
        assert_eq!(fbm_cov(&[0.0], &[0.0], 0.3, 1.0).unwrap(), 0.0);
        for h in [0.1, 0.5, 0.9] {
            let t = [0.6, 0.8];
            assert!((fbm_cov(&t, &t, h, 1.0).unwrap() - 1.0).abs() < 1e-15);
        }
        // Brownian kernel min(t, s)
        assert!((fbm_cov(&[0.25], &[0.75], 0.5, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(fbm_cov(&[0.1], &[0.2], 1.0, 1.0), Err(Error::InvalidHurst(_))));
        assert!(matches!(fbm_cov(&[0.1], &[0.2], 0.0, 1.0), Err(Error::InvalidHurst(_))));
    }

    #[test]
    fn same_seed_same_series() {
        let spec = SynthesisSpec::new(0.7, 1, 256, 99);
        let a = synth_fbm_1d(&spec).unwrap();
        let b = synth_fbm_1d(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], 0.0);
        assert_eq!(a.len(), 256);
        let c = synth_fbm_1d(&SynthesisSpec::new(0.7, 1, 256, 100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn same_seed_same_field() {
        let spec = SynthesisSpec::new(0.4, 2, 32, 5);
        let a = synth_fbf_2d(&spec).unwrap();
        let b = synth_fbf_2d(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples()[(0, 0)], 0.0);
    }

    #[test]
    fn fgn_embedding_is_nonnegative_across_hurst() {
        for h in [0.05, 0.3, 0.5, 0.7, 0.95] {
            for size in [2, 16, 1024] {
                synth_fbm_1d(&SynthesisSpec::new(h, 1, size, 1)).unwrap();
            }
        }
    }

    #[test]
    fn stein_embedding_is_nonnegative_across_hurst() {
        for h in [0.05, 0.1, 0.5, 0.74, 0.76, 0.9, 0.95] {
            for size in [8, 64] {
                FractionalSampler::new(&SynthesisSpec::new(h, 2, size, 1), FieldMethod::CirculantEmbedding).unwrap();
            }
        }
    }

    #[test]
    fn stein_kernel_is_continuous_at_unit_distance() {
        for h in [0.3, 0.9] {
            let k = SteinKernel::new(h);
            assert!((k.eval(1.0 - 1e-12) - k.eval(1.0 + 1e-12)).abs() < 1e-9);
            assert_eq!(k.eval(k.support + 0.1), 0.0);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            synth_fbm_1d(&SynthesisSpec::new(1.2, 1, 64, 0)),
            Err(Error::InvalidHurst(_))
        ));
        assert!(synth_fbm_1d(&SynthesisSpec::new(0.5, 1, 100, 0)).is_err());
        let mut rng = rng::stream(0, Purpose::Synthesis, 0, 0);
        assert!(matches!(
            synth_fbf_2d_with(&SynthesisSpec::new(0.5, 2, 64, 0), FieldMethod::Cholesky, &mut rng),
            Err(Error::EmbeddingFailure(_))
        ));
    }

    fn series_decomposition() -> Decomposition {
        let x = synth_fbm_1d(&SynthesisSpec::new(0.5, 1, 128, 3)).unwrap();
        Decomposition::OneD(dwt1d(&x, &WaveletFilter::new(FilterName::Haar), 2).unwrap())
    }

    #[test]
    fn zero_variance_leaves_input_identical() {
        let dec = series_decomposition();
        let mut spec = ContaminationSpec::new(3, 1);
        spec.scale = NoiseScale::Variance(0.0);
        assert_eq!(contaminate(&dec, &spec).unwrap(), dec);
    }

    #[test]
    fn untouched_bands_are_bit_identical() {
        let dec = series_decomposition();
        let out = contaminate(&dec, &ContaminationSpec::new(4, 2)).unwrap();
        for level in 2..=6 {
            let a = dec.band(Direction::Series, level).unwrap();
            let b = out.band(Direction::Series, level).unwrap();
            if level == 4 {
                assert_ne!(a, b);
            } else {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn out_of_range_level() {
        let dec = series_decomposition();
        assert!(matches!(
            contaminate(&dec, &ContaminationSpec::new(9, 0)),
            Err(Error::InvalidLevelRange(_))
        ));
    }

    #[test]
    fn match_average_energy_doubles_mean_energy() {
        // E[(d + e)^2] = E[d^2] + var(e) = 2 E[d^2]
        let dec = series_decomposition();
        let level = 5;
        let base: f64 = dec.band(Direction::Series, level).unwrap().iter().map(|v| v * v).sum::<f64>() / 32.0;
        let draws = 1000;
        let mut total = 0.0;
        for seed in 0..draws {
            let out = contaminate(&dec, &ContaminationSpec::new(level, seed)).unwrap();
            total += out.band(Direction::Series, level).unwrap().iter().map(|v| v * v).sum::<f64>() / 32.0;
        }
        let mean = total / draws as f64;
        assert!((mean / base - 2.0).abs() < 0.1, "ratio {}", mean / base);
    }
}
