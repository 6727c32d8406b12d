mod common;

use dvrp_core::harness::{
    gain, loocv_experiment_from, parse_summaries_csv, t_test, InstanceSummary, TTestKind,
};
use dvrp_core::selector::fit_ols;
use dvrp_core::{
    features::parse_features_csv, harness::join_by_name, loocv_experiment, stepwise_aic,
    welch_t_test, Algorithm, FeatureVector, TrainingRow,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

const SUBSET: [&str; 5] = ["mu_x", "sd_y", "skew_s", "mu_s", "nc"];

fn random_rows(rng: &mut ChaCha8Rng, n: usize) -> Vec<TrainingRow> {
    (0..n)
        .map(|i| {
            let mut f = [0.0; 10];
            for v in f.iter_mut() {
                *v = rng.random_range(-2.0..2.0);
            }
            let fv = FeatureVector::from_array(f);
            let signal: f64 = SUBSET
                .iter()
                .enumerate()
                .map(|(j, n)| (j as f64 - 2.0) * fv.get(n).unwrap())
                .sum();
            TrainingRow {
                name: format!("r{i}"),
                features: fv,
                ratio: 1.0 + 0.1 * signal + 0.05 * gaussian(rng),
            }
        })
        .collect()
}

#[test]
fn ols_matches_normal_equations_on_random_designs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let rows = random_rows(&mut rng, 20);
        let model = fit_ols(&rows, &SUBSET).unwrap();
        let x: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                std::iter::once(1.0)
                    .chain(SUBSET.iter().map(|n| r.features.get(n).unwrap()))
                    .collect()
            })
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        let beta = common::normal_equations(&x, &y);
        assert!((model.intercept - beta[0]).abs() < 1e-8);
        for (c, b) in model.coefficients.iter().zip(&beta[1..]) {
            assert!((c - b).abs() < 1e-8, "{c} vs {b}");
        }
        // Residuals are orthogonal to every design column.
        let resid: Vec<f64> = rows
            .iter()
            .map(|r| r.ratio - model.predict(&r.features))
            .collect();
        for j in 0..x[0].len() {
            let dot: f64 = x.iter().zip(&resid).map(|(row, e)| row[j] * e).sum();
            assert!(dot.abs() < 1e-8, "column {j}: {dot}");
        }
        let rss: f64 = resid.iter().map(|e| e * e).sum();
        assert!((model.rss - rss).abs() < 1e-10);
        // Five features plus the intercept.
        assert!((model.aic - (20.0 * (rss / 20.0).ln() + 12.0)).abs() < 1e-9);
    }
}

#[test]
fn stepwise_keeps_the_only_informative_feature() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<TrainingRow> = (0..21)
        .map(|i| {
            let mut f = [0.0; 10];
            for v in f.iter_mut() {
                *v = rng.random_range(0.0..1.0);
            }
            f[9] = rng.random_range(0.0..9.0);
            TrainingRow {
                name: format!("s{i}"),
                features: FeatureVector::from_array(f),
                ratio: 3.0 * f[9] + 1e-3 * gaussian(&mut rng),
            }
        })
        .collect();
    let fit = stepwise_aic(&rows).unwrap();
    assert!(fit.model.features.contains(&"nc".to_string()));
    let nc = fit.model.features.iter().position(|n| n == "nc").unwrap();
    assert!((fit.model.coefficients[nc] - 3.0).abs() < 1e-2);
    for pair in fit.path.windows(2) {
        assert!(pair[1].aic < pair[0].aic);
    }
}

fn benchmark_data() -> Vec<(FeatureVector, InstanceSummary)> {
    let features = parse_features_csv(&common::read_data("benchmark_features.csv")).unwrap();
    let summaries = parse_summaries_csv(&common::read_data("benchmark_results.csv")).unwrap();
    join_by_name(&features, &summaries).unwrap()
}

#[test]
fn printed_gains_follow_from_the_averages() {
    let text = common::read_data("benchmark_results.csv");
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut count = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let avg2: f64 = rec[2].parse().unwrap();
        let avgm: f64 = rec[4].parse().unwrap();
        let chosen: Algorithm = rec[6].parse().unwrap();
        let printed: f64 = rec[8].parse().unwrap();
        let (c, u) = match chosen {
            Algorithm::Memso => (avgm, avg2),
            Algorithm::TwoMpso => (avg2, avgm),
        };
        let g = 100.0 * gain(c, u);
        assert!(
            (g - printed).abs() <= 0.02,
            "{}: {g:.4} vs {printed}",
            &rec[0]
        );
        assert_eq!(g > 0.0, c < u);
        count += 1;
    }
    assert_eq!(count, 21);
}

#[test]
fn loocv_fits_never_see_the_held_out_row() {
    let data = benchmark_data();
    let report = loocv_experiment(&data).unwrap();
    assert_eq!(report.folds.len(), data.len());
    for fold in &report.folds {
        assert_eq!(fold.training.len(), data.len() - 1);
        assert!(!fold.training.contains(&fold.held_out));
        assert_eq!(fold.model.observations, data.len() - 1);
    }
}

#[test]
fn loocv_on_exactly_linear_ratios_is_always_right() {
    let mk = |name: &str, mu_x: f64| {
        let mut f = [0.5; 10];
        f[0] = mu_x;
        let memso = (0.8 + 0.4 * mu_x) * 1000.0;
        let summary = InstanceSummary {
            name: name.into(),
            two_mpso_min: 1000.0,
            two_mpso_avg: 1000.0,
            memso_min: memso,
            memso_avg: memso,
            significant: true,
        };
        (FeatureVector::from_array(f), summary)
    };
    let data = vec![mk("a", 0.1), mk("b", 0.9), mk("c", 0.3)];
    let report = loocv_experiment_from(&data, &["mu_x"]).unwrap();
    assert_eq!(report.accuracy(), (3, 3));
    for fold in &report.folds {
        let truth = data
            .iter()
            .find(|(_, s)| s.name == fold.held_out)
            .unwrap()
            .1
            .ratio();
        assert!((fold.predicted_ratio - truth).abs() < 1e-9);
    }
    // The full ten-feature start cannot be fitted on two rows.
    assert!(loocv_experiment(&data).is_err());
}

#[test]
fn loocv_needs_three_instances() {
    let data = benchmark_data();
    assert!(loocv_experiment(&data[..2]).is_err());
}

#[test]
fn welch_matches_the_simpson_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let na = rng.random_range(5..40);
        let nb = rng.random_range(5..40);
        let (sa, sb) = (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0));
        let shift = rng.random_range(-1.5..1.5);
        let a: Vec<f64> = (0..na).map(|_| sa * gaussian(&mut rng)).collect();
        let b: Vec<f64> = (0..nb).map(|_| shift + sb * gaussian(&mut rng)).collect();
        let got = welch_t_test(&a, &b, 0.05).unwrap();
        let (t, df, p) = common::welch_oracle(&a, &b);
        assert!((got.t - t).abs() < 1e-9);
        assert!((got.df - df).abs() < 1e-9);
        assert!((got.p - p).abs() < 1e-6, "p {} vs oracle {p}", got.p);
    }
}

#[test]
fn welch_on_two_normal_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let a: Vec<f64> = (0..30).map(|_| gaussian(&mut rng)).collect();
    let b: Vec<f64> = (0..30).map(|_| 0.1 + gaussian(&mut rng)).collect();
    let got = welch_t_test(&a, &b, 0.05).unwrap();
    assert!((got.p - common::welch_oracle(&a, &b).2).abs() < 1e-6);
}

#[test]
fn pooled_variant_uses_n_minus_two_degrees() {
    let a = [1.0, 2.0, 3.0, 5.0];
    let b = [2.0, 4.0, 6.0];
    let t = t_test(&a, &b, 0.05, TTestKind::Pooled).unwrap();
    assert_eq!(t.df, 5.0);
}

#[test]
fn too_few_values_is_an_error() {
    assert!(welch_t_test(&[1.0], &[1.0, 2.0], 0.05).is_err());
}
