//! File formats used by the command-line tool.
//!
//! * PGM: binary `P5`, 8 or 16 bits per sample.
//! * Matrices: comma separated rows of reals.
//! * Records, spectra and reports: CSV with a header row.
//! * Configuration: plain `key=value` lines, `#` starts a comment.
//!
//! Reals are written with Rust's shortest round-trip formatting, so output is
//! byte-identical for identical values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::dwt::{Decomposition, Decomposition1D, Decomposition2D, Direction, LevelBands};
use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::filter::FilterName;
use crate::harness::anova::AnovaTable;
use crate::harness::cv::CvReport;
use crate::harness::features::{DirectionalHurst, SampleRecord};
use crate::harness::simulation::{ContaminationConfig, ExperimentConfig, ExperimentReport, NoiseReference};
use crate::spectrum::{BiasMode, LevelRange, SpectrumPoint, WaveletSpectrum};
use crate::synthesis::{FieldMethod, NoiseScale};

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("{what}: `{}` is not a number", s.trim())))
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::Parse(format!("{what}: `{}` is not a non-negative integer", s.trim())))
}

// ---------------------------------------------------------------- PGM

/// Reads a binary PGM into an array of raw intensities (rows x cols).
pub fn read_pgm(path: &Path) -> Result<Array2<f64>> {
    parse_pgm(&fs::read(path)?)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<Array2<f64>> {
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if tokens[0] != "P5" {
        return Err(Error::Parse(format!("PGM magic `{}` is not P5", tokens[0])));
    }
    let cols = parse_usize(&tokens[1], "PGM width")?;
    let rows = parse_usize(&tokens[2], "PGM height")?;
    let maxval = parse_usize(&tokens[3], "PGM maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse(format!("PGM maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates header and raster
    pos += 1;
    let wide = maxval > 255;
    let need = rows * cols * if wide { 2 } else { 1 };
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| Error::Parse(format!("PGM raster has fewer than {need} bytes")))?;
    let values: Vec<f64> = if wide {
        raster.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]]) as f64).collect()
    } else {
        raster.iter().map(|&b| b as f64).collect()
    };
    Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::InvalidShape(e.to_string()))
}

/// Writes `data` linearly rescaled to `0..=maxval`. The conversion is lossy.
pub fn write_pgm(path: &Path, data: &Array2<f64>, sixteen_bit: bool) -> Result<()> {
    fs::write(path, encode_pgm(data, sixteen_bit))?;
    Ok(())
}

pub fn encode_pgm(data: &Array2<f64>, sixteen_bit: bool) -> Vec<u8> {
    let (rows, cols) = data.dim();
    let maxval: u32 = if sixteen_bit { 65535 } else { 255 };
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{cols} {rows}\n{maxval}\n").into_bytes();
    for &v in data.iter() {
        let q = (((v - lo) / span) * maxval as f64).round().clamp(0.0, maxval as f64) as u32;
        if sixteen_bit {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    out
}

// ---------------------------------------------------------------- matrices

pub fn format_matrix(data: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in data.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<Array2<f64>> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|c| parse_f64(c, &format!("matrix line {}", lineno + 1)))
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::InvalidShape(format!("matrix line {} has {} columns, expected {c}", lineno + 1, row.len())))
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse("empty matrix".into()))?;
    Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::InvalidShape(e.to_string()))
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, data: &Array2<f64>) -> Result<()> {
    fs::write(path, format_matrix(data))?;
    Ok(())
}

/// Reads a PGM (`.pgm`) or CSV matrix, choosing by extension.
pub fn read_image(path: &Path) -> Result<Array2<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("pgm") => read_pgm(path),
        _ => read_matrix(path),
    }
}

// ---------------------------------------------------------------- decompositions

fn band_file(direction: Direction, level: usize) -> String {
    format!("d_{}_{level}.csv", direction.as_str())
}

/// Writes every detail band as `d_<dir>_<level>.csv` plus `approx.csv`.
/// 1-D bands are written as a single row.
pub fn write_decomposition(dir: &Path, decomp: &Decomposition) -> Result<()> {
    fs::create_dir_all(dir)?;
    let row = |v: &[f64]| Array2::from_shape_vec((1, v.len()), v.to_vec()).expect("row shape");
    for level in decomp.coarsest_level()..=decomp.finest_level() {
        for &d in decomp.directions() {
            let data = match decomp {
                Decomposition::OneD(_) => row(decomp.band(d, level)?),
                Decomposition::TwoD(t) => t.levels[level - t.coarsest_level].get(d).expect("planar band").clone(),
            };
            write_matrix(&dir.join(band_file(d, level)), &data)?;
        }
    }
    let approx = match decomp {
        Decomposition::OneD(o) => row(&o.approx),
        Decomposition::TwoD(t) => t.approx.clone(),
    };
    write_matrix(&dir.join("approx.csv"), &approx)
}

/// Reads a directory written by [`write_decomposition`].
pub fn read_decomposition(dir: &Path) -> Result<Decomposition> {
    let mut bands: BTreeMap<(usize, Direction), Array2<f64>> = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        let Some(stem) = name.strip_prefix("d_").and_then(|s| s.strip_suffix(".csv")) else {
            continue;
        };
        let Some((d, level)) = stem.split_once('_') else {
            continue;
        };
        let direction: Direction = d.parse()?;
        let level = parse_usize(level, &name)?;
        bands.insert((level, direction), read_matrix(&dir.join(&name))?);
    }
    if bands.is_empty() {
        return Err(Error::Parse(format!("no d_<dir>_<level>.csv files in {}", dir.display())));
    }
    let approx = read_matrix(&dir.join("approx.csv"))?;
    let levels: Vec<usize> = {
        let mut l: Vec<usize> = bands.keys().map(|k| k.0).collect();
        l.dedup();
        l
    };
    let coarsest = levels[0];
    if levels.iter().enumerate().any(|(i, &l)| l != coarsest + i) {
        return Err(Error::InvalidLevelRange("decomposition levels are not contiguous".into()));
    }
    let one_d = bands.keys().all(|k| k.1 == Direction::Series);
    let mut take = |level: usize, d: Direction| {
        bands
            .remove(&(level, d))
            .ok_or_else(|| Error::Parse(format!("missing {}", band_file(d, level))))
    };
    let check = |a: &Array2<f64>, rows: usize, cols: usize, what: &str| {
        if a.dim() == (rows, cols) {
            Ok(())
        } else {
            Err(Error::InvalidShape(format!("{what} is {:?}, expected ({rows}, {cols})", a.dim())))
        }
    };
    if one_d {
        let mut details = Vec::new();
        for &level in &levels {
            let b = take(level, Direction::Series)?;
            check(&b, 1, 1 << level, &band_file(Direction::Series, level))?;
            details.push(b.into_raw_vec_and_offset().0);
        }
        check(&approx, 1, 1 << coarsest, "approx.csv")?;
        Ok(Decomposition::OneD(Decomposition1D {
            coarsest_level: coarsest,
            details,
            approx: approx.into_raw_vec_and_offset().0,
        }))
    } else {
        let mut out = Vec::new();
        for &level in &levels {
            let side = 1 << level;
            let mut get = |d: Direction| -> Result<Array2<f64>> {
                let b = take(level, d)?;
                check(&b, side, side, &band_file(d, level))?;
                Ok(b.as_standard_layout().into_owned())
            };
            out.push(LevelBands {
                h: get(Direction::Horizontal)?,
                v: get(Direction::Vertical)?,
                d: get(Direction::Diagonal)?,
            });
        }
        check(&approx, 1 << coarsest, 1 << coarsest, "approx.csv")?;
        Ok(Decomposition::TwoD(Decomposition2D {
            coarsest_level: coarsest,
            levels: out,
            approx,
        }))
    }
}

// ---------------------------------------------------------------- spectra

pub fn format_spectrum(spec: &WaveletSpectrum) -> String {
    let mut out = String::from("level,count,mu,y\n");
    for p in &spec.points {
        let _ = writeln!(out, "{},{},{},{}", p.level, p.count, p.mean_energy, p.log_energy);
    }
    out
}

/// Parses a spectrum CSV. The bias mode is recovered from `y - log2 mu`.
pub fn parse_spectrum(text: &str, dimension: usize, direction: Direction) -> Result<WaveletSpectrum> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("level")) {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 {
            return Err(Error::Parse(format!("spectrum line {}: expected 4 columns", lineno + 1)));
        }
        let what = format!("spectrum line {}", lineno + 1);
        points.push(SpectrumPoint {
            level: parse_usize(cells[0], &what)?,
            count: parse_usize(cells[1], &what)?,
            mean_energy: parse_f64(cells[2], &what)?,
            log_energy: parse_f64(cells[3], &what)?,
        });
    }
    let mode = infer_bias_mode(&points);
    WaveletSpectrum::from_points(direction, dimension, points, mode)
}

fn infer_bias_mode(points: &[SpectrumPoint]) -> BiasMode {
    let matches = |mode: BiasMode| {
        points.iter().all(|p| {
            let expected = p.mean_energy.log2() + crate::spectrum::bias_offset(p.count, mode);
            (p.log_energy - expected).abs() <= 1e-9 * (1.0 + expected.abs())
        })
    };
    [BiasMode::None, BiasMode::SecondOrder, BiasMode::ExactDigamma]
        .into_iter()
        .find(|&m| matches(m))
        .unwrap_or(BiasMode::None)
}

// ---------------------------------------------------------------- records

pub const RECORDS_HEADER: &str = "subject_id,status,patch,hd,hh,hv";

pub fn format_records(records: &[SampleRecord]) -> String {
    let mut out = format!("{RECORDS_HEADER}\n");
    for r in records {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.subject_id, r.status, r.patch, r.hd, r.hh, r.hv);
    }
    out
}

pub fn parse_records(text: &str) -> Result<Vec<SampleRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty records file".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let index = |name: &str| {
        columns
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse(format!("records header lacks `{name}`")))
    };
    let cols = [
        index("subject_id")?,
        index("status")?,
        index("patch")?,
        index("hd")?,
        index("hh")?,
        index("hv")?,
    ];
    let mut out = Vec::new();
    for (lineno, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(Error::Parse(format!("records line {}: expected {} columns", lineno + 1, columns.len())));
        }
        let what = format!("records line {}", lineno + 1);
        let patch = parse_usize(cells[cols[2]], &what)?;
        let patch = u8::try_from(patch).map_err(|_| Error::Parse(format!("{what}: patch {patch}")))?;
        let h = DirectionalHurst {
            d: parse_f64(cells[cols[3]], &what)?,
            h: parse_f64(cells[cols[4]], &what)?,
            v: parse_f64(cells[cols[5]], &what)?,
        };
        out.push(SampleRecord::new(cells[cols[0]], cells[cols[1]].parse()?, patch, h)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------- reports

pub fn format_report(report: &ExperimentReport) -> String {
    let mut out = String::from("hurst,filter,method,direction,arm,replicates,mean,bias,variance,mse,out_of_range\n");
    for c in &report.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.hurst,
            c.filter,
            c.method,
            c.direction,
            if c.contaminated { "contaminated" } else { "clean" },
            c.replicates,
            c.mean,
            c.bias,
            c.variance,
            c.mse,
            c.out_of_range
        );
    }
    out
}

pub fn format_cv_report(r: &CvReport, features: &str) -> String {
    format!(
        "features,folds,repetitions,total,specificity,sensitivity,auc,separated_folds\n{},{},{},{},{},{},{},{}\n",
        features.replace(',', "+"),
        r.folds,
        r.repetitions,
        r.total,
        r.specificity,
        r.sensitivity,
        r.auc,
        r.separated_folds
    )
}

pub fn format_anova(t: &AnovaTable) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut out = String::from("source,ss,df,ms,f,p\n");
    for r in &t.rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.source, r.sum_sq, r.df, opt(r.mean_sq), opt(r.f), opt(r.p));
    }
    out
}

// ---------------------------------------------------------------- configuration

/// `key=value` pairs in file order. Later duplicates override earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", lineno + 1)))?;
        out.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }
    Ok(out)
}

fn parse_list<T: std::str::FromStr<Err = Error>>(v: &str) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse()).collect()
}

fn parse_bool(v: &str, key: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!("{key}: `{v}` is not a boolean"))),
    }
}

/// Builds an experiment from a `key=value` file.
///
/// Keys: `dimension`, `hurst` (list), `size`, `filters` (list), `methods`
/// (list), `levels` (`3:7`, default [`LevelRange::for_size`]), `replicates`,
/// `seed`, `center`, `field_method` (`auto|circulant|cholesky`),
/// `contamination_level` (a level, or `coarse` for the first fitted level),
/// `contamination_directions` (list), `noise_scale` (`match` or a variance),
/// `noise_reference` (`realization|ensemble`).
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let kv = parse_key_values(text)?;
    let mut c = ExperimentConfig::default();
    let mut contamination: Option<ContaminationConfig> = None;
    let mut directions = Vec::new();
    let mut scale = NoiseScale::MatchAverageEnergy;
    let mut reference = NoiseReference::PerRealization;
    let mut levels = None;
    let mut contamination_level = None;
    for (key, v) in &kv {
        match key.as_str() {
            "dimension" | "dim" => c.dimension = parse_usize(v, key)?,
            "hurst" => c.hurst = v.split(',').map(|s| parse_f64(s, key)).collect::<Result<_>>()?,
            "size" => c.size = parse_usize(v, key)?,
            "filters" | "filter" => c.filters = parse_list::<FilterName>(v)?,
            "methods" | "method" => c.methods = parse_list::<Method>(v)?,
            "levels" => levels = Some(v.parse()?),
            "replicates" | "reps" => c.replicates = parse_usize(v, key)?,
            "seed" => c.base_seed = v.parse().map_err(|_| Error::Parse(format!("seed: `{v}`")))?,
            "center" => c.center = parse_bool(v, key)?,
            "field_method" => {
                c.field_method = match v.to_ascii_lowercase().as_str() {
                    "auto" => FieldMethod::Auto,
                    "circulant" | "circulant_embedding" => FieldMethod::CirculantEmbedding,
                    "cholesky" => FieldMethod::Cholesky,
                    _ => return Err(Error::Parse(format!("field_method: `{v}`"))),
                }
            }
            "contamination_level" => contamination_level = Some(v.clone()),
            "contamination_directions" => directions = parse_list::<Direction>(v)?,
            "noise_scale" => {
                scale = if v.eq_ignore_ascii_case("match") {
                    NoiseScale::MatchAverageEnergy
                } else {
                    NoiseScale::Variance(parse_f64(v, key)?)
                }
            }
            "noise_reference" => {
                reference = match v.to_ascii_lowercase().as_str() {
                    "realization" | "per_realization" => NoiseReference::PerRealization,
                    "ensemble" => NoiseReference::Ensemble,
                    _ => return Err(Error::Parse(format!("noise_reference: `{v}`"))),
                }
            }
            other => return Err(Error::Parse(format!("unknown config key `{other}`"))),
        }
    }
    c.levels = match levels {
        Some(l) => l,
        None => LevelRange::for_size(c.size)?,
    };
    if let Some(v) = contamination_level {
        let level = if v.eq_ignore_ascii_case("coarse") {
            c.levels.first
        } else {
            parse_usize(&v, "contamination_level")?
        };
        contamination = Some(ContaminationConfig::at_level(level));
    }
    if let Some(cc) = &mut contamination {
        cc.directions = directions;
        cc.scale = scale;
        cc.reference = reference;
    }
    c.contamination = contamination;
    c.validate()?;
    Ok(c)
}
