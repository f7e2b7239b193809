use ndarray::Array2;
use proptest::prelude::*;

use wavehurst::dwt::{dwt1d, dwt2d, idwt1d, idwt2d, transpose_decomposition, Decomposition, Grid2D};
use wavehurst::estimators::{estimate, estimate_tt_with, Method};
use wavehurst::filter::{FilterName, WaveletFilter};
use wavehurst::harness::cv::assign_folds;
use wavehurst::harness::{nested_anova, roc_curve, DirectionalHurst, Feature, SampleRecord, Status};
use wavehurst::spectrum::{level_count, LevelRange, SpectrumPoint, WaveletSpectrum};
use wavehurst::synthesis::{synth_fbf_2d, synth_fbm_1d, SynthesisSpec};

fn filter_name() -> impl Strategy<Value = FilterName> {
    prop::sample::select(FilterName::ALL.to_vec())
}

fn signal(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, len)
}

fn grid(side: usize) -> impl Strategy<Value = Grid2D> {
    signal(side * side).prop_map(move |v| Grid2D::new(Array2::from_shape_vec((side, side), v).unwrap()).unwrap())
}

fn spectrum(dimension: usize, first: usize, ys: &[f64]) -> WaveletSpectrum {
    let points = ys
        .iter()
        .enumerate()
        .map(|(k, &y)| SpectrumPoint {
            level: first + k,
            count: level_count(first + k, dimension),
            mean_energy: y.exp2(),
            log_energy: y,
        })
        .collect();
    let dir = if dimension == 1 { wavehurst::Direction::Series } else { wavehurst::Direction::Diagonal };
    WaveletSpectrum::from_points(dir, dimension, points, wavehurst::BiasMode::None).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_and_reconstruction_1d(name in filter_name(), x in signal(256), j0 in 0usize..6) {
        let f = WaveletFilter::new(name);
        let d = dwt1d(&x, &f, j0).unwrap();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        prop_assert!(close(Decomposition::OneD(d.clone()).energy(), energy, 1e-12));
        let back = idwt1d(&d, &f).unwrap();
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn parseval_and_reconstruction_2d(name in filter_name(), g in grid(32), j0 in 0usize..4) {
        let f = WaveletFilter::new(name);
        let d = dwt2d(&g, &f, j0).unwrap();
        prop_assert!(close(Decomposition::TwoD(d.clone()).energy(), g.energy(), 1e-12));
        let back = idwt2d(&d, &f).unwrap();
        for (a, b) in back.samples().iter().zip(g.samples()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn transposing_input_swaps_horizontal_and_vertical(name in filter_name(), g in grid(16)) {
        let f = WaveletFilter::new(name);
        let direct = dwt2d(&g.transpose(), &f, 0).unwrap();
        let swapped = transpose_decomposition(&dwt2d(&g, &f, 0).unwrap());
        for (a, b) in direct.levels.iter().zip(&swapped.levels) {
            for (x, y) in [(&a.h, &b.h), (&a.v, &b.v), (&a.d, &b.d)] {
                for (p, q) in x.iter().zip(y.iter()) {
                    prop_assert!((p - q).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn scaling_input_scales_coefficients(name in filter_name(), x in signal(128), c in 0.01..100.0f64) {
        let f = WaveletFilter::new(name);
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let a = dwt1d(&x, &f, 0).unwrap();
        let b = dwt1d(&scaled, &f, 0).unwrap();
        for (da, db) in a.details.iter().flatten().zip(b.details.iter().flatten()) {
            prop_assert!((c * da - db).abs() < 1e-9 * (1.0 + db.abs()));
        }
    }

    #[test]
    fn estimates_ignore_the_intercept(
        dim in 1usize..=2,
        first in 1usize..4,
        ys in prop::collection::vec(-20.0..20.0f64, 2..7),
        offset in -50.0..50.0f64,
    ) {
        let s = spectrum(dim, first, &ys);
        let shifted = s.shifted(offset);
        for m in Method::ALL {
            let a = estimate(&s, m).unwrap().hurst;
            let b = estimate(&shifted, m).unwrap().hurst;
            prop_assert!(close(a, b, 1e-9), "{m}: {a} vs {b}");
        }
    }

    #[test]
    fn tt_matches_brute_force_over_ordered_pairs(
        dim in 1usize..=2,
        first in 1usize..4,
        ys in prop::collection::vec(-20.0..20.0f64, 2..=8),
        corrected in any::<bool>(),
    ) {
        let s = spectrum(dim, first, &ys);
        let m = dim as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for (a, &ya) in ys.iter().enumerate() {
            for (b, &yb) in ys.iter().enumerate() {
                if a == b {
                    continue;
                }
                let (i, j) = ((first + a) as f64, (first + b) as f64);
                let (ni, nj) = ((m * i).exp2(), (m * j).exp2());
                let mut slope = (yb - ya) / (j - i);
                if corrected {
                    slope += (1.0 / nj - 1.0 / ni) / ((j - i) * std::f64::consts::LN_2);
                }
                let w = (i - j).powi(2) * 2.0 / (1.0 / ni + 1.0 / nj);
                num += w * slope;
                den += w;
            }
        }
        let expected = -(num / den + m) / 2.0;
        let got = estimate_tt_with(&s, corrected).unwrap().hurst;
        prop_assert!(close(got, expected, 1e-10), "{got} vs {expected}");
    }

    #[test]
    fn auc_equals_pair_counting(
        scores in prop::collection::vec(prop::sample::select(vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.5]), 4..40),
        seed in any::<u64>(),
    ) {
        let labels: Vec<bool> = (0..scores.len()).map(|i| (seed >> (i % 64)) & 1 == 1 || i == 0).collect();
        prop_assume!(labels.iter().any(|&l| !l));
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (p, _) in scores.iter().zip(&labels).filter(|(_, &l)| l) {
            for (q, _) in scores.iter().zip(&labels).filter(|(_, &l)| !l) {
                pairs += 1.0;
                wins += if p > q { 1.0 } else if p == q { 0.5 } else { 0.0 };
            }
        }
        let auc = roc_curve(&scores, &labels).unwrap().auc;
        prop_assert!((auc - wins / pairs).abs() < 1e-12);
    }

    #[test]
    fn anova_sums_of_squares_close(
        sizes in prop::collection::vec(1usize..=5, 4..12),
        values in prop::collection::vec(0.0..1.0f64, 60),
    ) {
        let mut records = Vec::new();
        let mut k = 0;
        for (s, &n) in sizes.iter().enumerate() {
            let status = if s % 2 == 0 { Status::Cancer } else { Status::Normal };
            for p in 1..=n {
                let v = values[k % values.len()];
                k += 1;
                let h = DirectionalHurst { d: v, h: v, v };
                records.push(SampleRecord::new(format!("s{s}"), status, p as u8, h).unwrap());
            }
        }
        let t = nested_anova(&records, Feature::Hd).unwrap();
        let parts: f64 = ["Status", "Patients(Status)", "Error"].iter().map(|r| t.row(r).unwrap().sum_sq).sum();
        let total = t.row("Total").unwrap().sum_sq;
        prop_assert!((parts - total).abs() <= 1e-9 * (1.0 + total));
        let dfs: usize = ["Status", "Patients(Status)", "Error"].iter().map(|r| t.row(r).unwrap().df).sum();
        prop_assert_eq!(dfs, t.row("Total").unwrap().df);
    }

    #[test]
    fn folds_are_stratified_per_subject(
        cancer in 4usize..30,
        normal in 4usize..30,
        folds in 2usize..5,
        seed in any::<u64>(),
        rep in 0usize..100,
    ) {
        let statuses: Vec<Status> = (0..cancer + normal)
            .map(|i| if i < cancer { Status::Cancer } else { Status::Normal })
            .collect();
        let a = assign_folds(&statuses, folds, seed, rep);
        prop_assert_eq!(a.len(), statuses.len());
        for status in [Status::Cancer, Status::Normal] {
            let counts: Vec<usize> = (0..folds)
                .map(|f| (0..a.len()).filter(|&i| statuses[i] == status && a[i] == f).count())
                .collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "{counts:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn synthesis_is_seeded(h in 0.1..0.9f64, seed in any::<u64>()) {
        let one = SynthesisSpec::new(h, 1, 128, seed);
        prop_assert_eq!(synth_fbm_1d(&one).unwrap(), synth_fbm_1d(&one).unwrap());
        let two = SynthesisSpec::new(h, 2, 16, seed);
        prop_assert_eq!(synth_fbf_2d(&two).unwrap(), synth_fbf_2d(&two).unwrap());
    }

    #[test]
    fn level_range_default_skips_finest(exp in 3u32..14) {
        let size = 1usize << exp;
        let r = LevelRange::for_size(size).unwrap();
        prop_assert_eq!(r.last, exp as usize - 2);
        prop_assert!(r.len() <= 5);
    }
}
