use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wavehurst::dwt::{dwt1d, dwt2d, Decomposition, Direction, Grid2D};
use wavehurst::estimators::{estimate, estimate_av_with, Method};
use wavehurst::filter::{FilterName, WaveletFilter};
use wavehurst::harness::{
    classify_cv, nested_anova, run_simulation, synthetic_cohort, CohortConfig, CvConfig, Feature, PatchLayout,
    ThresholdRule,
};
use wavehurst::io;
use wavehurst::spectrum::{apply_bias_correction, level_energies, BiasMode, LevelRange};
use wavehurst::synthesis::{synth_fbf_2d, synth_fbm_1d, SynthesisSpec};
use wavehurst::{Error, Result};

#[derive(Parser)]
#[command(name = "wavehurst", version, about = "Wavelet-based Hurst exponent estimation")]
struct Cli {
    /// Worker threads for parallel commands (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a signal or image into detail subbands.
    Dwt {
        /// PGM image, or CSV matrix (a single row is a 1-D signal).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "haar")]
        filter: FilterName,
        #[arg(long, default_value_t = 0)]
        j0: usize,
        #[arg(long)]
        out: PathBuf,
        /// Subtract the sample mean first.
        #[arg(long)]
        center: bool,
    },
    /// Synthesize fractional Brownian motion or a fractional Brownian field.
    Synth {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        hurst: f64,
        #[arg(long, default_value_t = 512)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// `.csv` for exact values, `.pgm` for a rescaled 16-bit image.
        #[arg(long)]
        out: PathBuf,
    },
    /// Level-wise log2 energies of one direction of a decomposition directory.
    Spectrum {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "d")]
        dir: Direction,
        #[arg(long, default_value = "3:7")]
        levels: LevelRange,
        #[arg(long, default_value = "none")]
        bias: BiasMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate H from a spectrum CSV.
    Estimate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "tt")]
        method: Method,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        dir: Option<Direction>,
    },
    /// Monte-Carlo benchmark from a key=value configuration.
    Simstudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validated logistic classification of patch records.
    Classify {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value = "hd")]
        features: String,
        #[arg(long, default_value_t = 4)]
        folds: usize,
        #[arg(long, default_value_t = 30)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Use one threshold from a model fitted to all subjects.
        #[arg(long)]
        global_threshold: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nested ANOVA (patients within status) of one feature.
    Anova {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value = "hd")]
        feature: Feature,
        #[arg(long)]
        out: PathBuf,
    },
    /// Patch records from PGM images or a synthetic two-class cohort.
    Cohort {
        #[arg(long, default_value_t = 50)]
        cancer: usize,
        #[arg(long, default_value_t = 50)]
        normal: usize,
        #[arg(long, default_value_t = 0.45)]
        cancer_hurst: f64,
        #[arg(long, default_value_t = 0.65)]
        normal_hurst: f64,
        #[arg(long, default_value_t = 512)]
        image_side: usize,
        /// Layout file; overrides --patch-side.
        #[arg(long)]
        layout: Option<PathBuf>,
        #[arg(long, default_value_t = 256)]
        patch_side: usize,
        #[arg(long, default_value = "daub6")]
        filter: FilterName,
        #[arg(long, default_value = "3:7")]
        levels: LevelRange,
        #[arg(long, default_value = "tt")]
        method: Method,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Dwt {
            input,
            filter,
            j0,
            out,
            center,
        } => {
            let data = io::read_image(&input)?;
            let filter = WaveletFilter::new(filter);
            let decomp = if data.nrows() == 1 {
                let mut x = data.into_raw_vec_and_offset().0;
                if center {
                    let m = x.iter().sum::<f64>() / x.len() as f64;
                    x.iter_mut().for_each(|v| *v -= m);
                }
                Decomposition::OneD(dwt1d(&x, &filter, j0)?)
            } else {
                let g = Grid2D::new(data)?;
                let g = if center { g.centered() } else { g };
                Decomposition::TwoD(dwt2d(&g, &filter, j0)?)
            };
            io::write_decomposition(&out, &decomp)
        }
        Command::Synth {
            dim,
            hurst,
            size,
            seed,
            sigma,
            out,
        } => {
            let spec = SynthesisSpec {
                sigma,
                ..SynthesisSpec::new(hurst, dim, size, seed)
            };
            let data = if dim == 1 {
                let x = synth_fbm_1d(&spec)?;
                ndarray::Array2::from_shape_vec((1, x.len()), x).expect("row shape")
            } else {
                synth_fbf_2d(&spec)?.into_samples()
            };
            match out.extension().and_then(|e| e.to_str()) {
                Some(e) if e.eq_ignore_ascii_case("pgm") => {
                    eprintln!("note: PGM output is linearly rescaled to 16 bits (lossy)");
                    io::write_pgm(&out, &data, true)
                }
                _ => io::write_matrix(&out, &data),
            }
        }
        Command::Spectrum {
            input,
            dir,
            levels,
            bias,
            out,
        } => {
            let decomp = io::read_decomposition(&input)?;
            let spec = level_energies(&decomp, dir, levels)?;
            let spec = apply_bias_correction(&spec, bias)?;
            write(&out, &io::format_spectrum(&spec))
        }
        Command::Estimate {
            input,
            method,
            dim,
            dir,
        } => {
            let default_dir = if dim == 1 { Direction::Series } else { Direction::Diagonal };
            let spec = io::parse_spectrum(&fs::read_to_string(&input)?, dim, dir.unwrap_or(default_dir))?;
            // an AV-corrected spectrum is fitted as given
            let e = if method == Method::Av && spec.bias_mode != BiasMode::None {
                estimate_av_with(&spec, BiasMode::None)?
            } else {
                estimate(&spec, method)?
            };
            println!("method,direction,slope,H,flags");
            println!("{},{},{},{},{}", e.method, e.direction, e.slope, e.hurst, e.flags());
            Ok(())
        }
        Command::Simstudy { config, out } => {
            let config = io::parse_experiment_config(&fs::read_to_string(&config)?)?;
            let report = run_simulation(&config)?;
            write(&out, &io::format_report(&report))
        }
        Command::Classify {
            records,
            features,
            folds,
            reps,
            seed,
            global_threshold,
            out,
        } => {
            let recs = io::parse_records(&fs::read_to_string(&records)?)?;
            let list = Feature::parse_list(&features)?;
            let config = CvConfig {
                folds,
                repetitions: reps,
                seed,
                threshold: if global_threshold { ThresholdRule::Global } else { ThresholdRule::PerFold },
            };
            let report = classify_cv(&recs, &list, &config)?;
            let names: Vec<&str> = list.iter().map(|f| f.as_str()).collect();
            write(&out, &io::format_cv_report(&report, &names.join(",")))
        }
        Command::Anova { records, feature, out } => {
            let recs = io::parse_records(&fs::read_to_string(&records)?)?;
            write(&out, &io::format_anova(&nested_anova(&recs, feature)?))
        }
        Command::Cohort {
            cancer,
            normal,
            cancer_hurst,
            normal_hurst,
            image_side,
            layout,
            patch_side,
            filter,
            levels,
            method,
            seed,
            out,
        } => {
            let layout = match layout {
                Some(p) => PatchLayout::parse(&fs::read_to_string(p)?)?,
                None => PatchLayout::with_side(patch_side),
            };
            let config = CohortConfig {
                cancer_subjects: cancer,
                normal_subjects: normal,
                cancer_hurst,
                normal_hurst,
                image_side,
                layout,
                filter,
                levels,
                method,
                seed,
            };
            write(&out, &io::format_records(&synthetic_cohort(&config)?))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| run(cli.command)),
            Err(e) => Err(Error::InvalidParameter(e.to_string())),
        },
        None => run(cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
