//! Instance features computed from the requests known at the start of the
//! day: location and volume moments plus a cluster-count mismatch score.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Point, ProblemInstance};
use crate::error::{DvrpError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentMode {
    /// Central moments over `n`: `sd = √m2`, `skew = m3 / m2^1.5`.
    #[default]
    Population,
    /// `sd` over `n − 1` and `skew = m3 / sd³`.
    Sample,
    /// `sd` over `n − 1` and the adjusted coefficient
    /// `G1 = g1 · √(n(n−1)) / (n − 2)`.
    Adjusted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapConfig {
    pub k_max: usize,
    /// Uniform reference sets per `k`.
    pub references: usize,
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig {
            k_max: 10,
            references: 50,
            restarts: 10,
            max_iterations: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureOptions {
    pub moment_mode: MomentMode,
    /// Let the depot stretch the min-max box used for normalization.
    pub include_depot: bool,
    pub gap: GapConfig,
    pub seed: u64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            moment_mode: MomentMode::Population,
            include_depot: false,
            gap: GapConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mu_x: f64,
    pub sd_x: f64,
    pub skew_x: f64,
    pub mu_y: f64,
    pub sd_y: f64,
    pub skew_y: f64,
    pub mu_s: f64,
    pub sd_s: f64,
    pub skew_s: f64,
    pub nc: f64,
}

impl FeatureVector {
    pub const NAMES: [&'static str; 10] = [
        "mu_x", "sd_x", "skew_x", "mu_y", "sd_y", "skew_y", "mu_s", "sd_s", "skew_s", "nc",
    ];

    pub fn to_array(&self) -> [f64; 10] {
        [
            self.mu_x,
            self.sd_x,
            self.skew_x,
            self.mu_y,
            self.sd_y,
            self.skew_y,
            self.mu_s,
            self.sd_s,
            self.skew_s,
            self.nc,
        ]
    }

    pub fn from_array(a: [f64; 10]) -> Self {
        FeatureVector {
            mu_x: a[0],
            sd_x: a[1],
            skew_x: a[2],
            mu_y: a[3],
            sd_y: a[4],
            skew_y: a[5],
            mu_s: a[6],
            sd_s: a[7],
            skew_s: a[8],
            nc: a[9],
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.to_array()[i])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub k_gap: usize,
    /// Capacity lower bound on the vehicle count.
    pub m_v: usize,
    /// `Gap(k)` for `k = 1 ..= k_max`.
    pub gaps: Vec<f64>,
    /// `s_k = sd_k · √(1 + 1/B)` for the same `k`.
    pub std_errors: Vec<f64>,
}

/// Mean, standard deviation and skewness under `mode`. Degenerate samples
/// (fewer than two values or zero variance) have zero sd and skewness;
/// [`MomentMode::Adjusted`] also needs three values for the skewness.
pub fn moments(values: &[f64], mode: MomentMode) -> (f64, f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0, 0.0);
    }
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    // Rounding noise on a constant sample.
    let scale = values.iter().map(|v| v * v).sum::<f64>() / n;
    if m2 <= scale * 1e-24 {
        return (mean, 0.0, 0.0);
    }
    let g1 = m3 / m2.powf(1.5);
    match mode {
        MomentMode::Population => (mean, m2.sqrt(), g1),
        MomentMode::Sample => {
            let s = (m2 * n / (n - 1.0)).sqrt();
            (mean, s, m3 / s.powi(3))
        }
        MomentMode::Adjusted => {
            let s = (m2 * n / (n - 1.0)).sqrt();
            let skew = if values.len() < 3 {
                0.0
            } else {
                g1 * (n * (n - 1.0)).sqrt() / (n - 2.0)
            };
            (mean, s, skew)
        }
    }
}

/// Standardized skewness `g1 = m3 / m2^1.5` with moments over `n`.
pub fn sample_skewness(values: &[f64]) -> f64 {
    moments(values, MomentMode::Population).2
}

/// Within-cluster sum of squared distances to the cluster means.
fn within_dispersion(points: &[Point], labels: &[usize], k: usize) -> f64 {
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &l) in points.iter().zip(labels) {
        sums[l].0 += p.x;
        sums[l].1 += p.y;
        sums[l].2 += 1;
    }
    let centers: Vec<Point> = sums
        .iter()
        .map(|&(x, y, c)| {
            if c == 0 {
                Point::new(0.0, 0.0)
            } else {
                Point::new(x / c as f64, y / c as f64)
            }
        })
        .collect();
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| {
            let d = p.distance(&centers[l]);
            d * d
        })
        .sum()
}

fn nearest(centers: &[Point], p: &Point) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = (p.x - c.x).powi(2) + (p.y - c.y).powi(2);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Best of `restarts` k-means++ / Lloyd runs; returns labels and the
/// within-cluster sum of squares.
pub fn kmeans(
    points: &[Point],
    k: usize,
    restarts: usize,
    max_iterations: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, f64) {
    let k = k.clamp(1, points.len().max(1));
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..restarts.max(1) {
        // k-means++ seeding.
        let mut centers = vec![points[rng.random_range(0..points.len())]];
        while centers.len() < k {
            let weights: Vec<f64> = points.iter().map(|p| nearest(&centers, p).1).collect();
            let total: f64 = weights.iter().sum();
            if total <= 0.0 {
                centers.push(points[rng.random_range(0..points.len())]);
                continue;
            }
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            centers.push(points[chosen]);
        }
        let mut labels = vec![usize::MAX; points.len()];
        for _ in 0..max_iterations {
            let mut changed = false;
            for (l, p) in labels.iter_mut().zip(points) {
                let (c, _) = nearest(&centers, p);
                if *l != c {
                    *l = c;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            let mut sums = vec![(0.0, 0.0, 0usize); k];
            for (p, &l) in points.iter().zip(&labels) {
                sums[l].0 += p.x;
                sums[l].1 += p.y;
                sums[l].2 += 1;
            }
            for (c, &(x, y, n)) in centers.iter_mut().zip(&sums) {
                if n > 0 {
                    *c = Point::new(x / n as f64, y / n as f64);
                }
            }
        }
        let w = within_dispersion(points, &labels, k);
        if best.as_ref().is_none_or(|b| w < b.1) {
            best = Some((labels, w));
        }
    }
    best.expect("at least one restart")
}

fn log_dispersion(w: f64) -> f64 {
    w.max(f64::MIN_POSITIVE).ln()
}

/// Gap statistic over `k = 1 ..= k_max` with uniform references drawn in
/// the bounding box of `points`; `k_gap` is the smallest `k` with
/// `Gap(k) ≥ Gap(k+1) − s_{k+1}`, else `k_max`. `m_v` is left at 1.
pub fn gap_statistic(points: &[Point], config: &GapConfig, seed: u64) -> Result<GapResult> {
    if points.len() < 2 {
        return Err(DvrpError::InsufficientData(
            "gap statistic needs at least 2 points".into(),
        ));
    }
    if config.k_max == 0 || config.references == 0 {
        return Err(DvrpError::Config(
            "k_max and references must be at least 1".into(),
        ));
    }
    let k_max = config.k_max.min(points.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let references: Vec<Vec<Point>> = (0..config.references)
        .map(|_| {
            (0..points.len())
                .map(|_| {
                    Point::new(
                        lo.x + rng.random::<f64>() * (hi.x - lo.x),
                        lo.y + rng.random::<f64>() * (hi.y - lo.y),
                    )
                })
                .collect()
        })
        .collect();
    let b = config.references as f64;
    let mut gaps = Vec::with_capacity(k_max);
    let mut std_errors = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let (_, w) = kmeans(points, k, config.restarts, config.max_iterations, &mut rng);
        let logs: Vec<f64> = references
            .iter()
            .map(|r| {
                log_dispersion(kmeans(r, k, config.restarts, config.max_iterations, &mut rng).1)
            })
            .collect();
        let mean = logs.iter().sum::<f64>() / b;
        let sd = (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / b).sqrt();
        gaps.push(mean - log_dispersion(w));
        std_errors.push(sd * (1.0 + 1.0 / b).sqrt());
    }
    let k_gap = (1..k_max)
        .find(|&k| gaps[k - 1] >= gaps[k] - std_errors[k])
        .unwrap_or(k_max);
    Ok(GapResult {
        k_gap,
        m_v: 1,
        gaps,
        std_errors,
    })
}

/// Maps `v` into `[0, 1]` over `[lo, hi]`; a flat axis maps to 0.5.
fn normalize(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

/// Features of the requests with arrival time 0.
pub fn extract_features(
    instance: &ProblemInstance,
    options: &FeatureOptions,
) -> Result<(FeatureVector, GapResult)> {
    let known: Vec<_> = instance
        .requests()
        .iter()
        .filter(|r| r.is_a_priori())
        .collect();
    if known.len() < 2 {
        return Err(DvrpError::InsufficientData(format!(
            "{}: features need at least 2 requests known at the start, found {}",
            instance.name(),
            known.len()
        )));
    }
    let mut lo = known[0].location;
    let mut hi = lo;
    let depot = instance.depot();
    let box_points = known
        .iter()
        .map(|r| r.location)
        .chain(options.include_depot.then_some(depot));
    for p in box_points {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let scaled: Vec<Point> = known
        .iter()
        .map(|r| {
            Point::new(
                normalize(r.location.x, lo.x, hi.x),
                normalize(r.location.y, lo.y, hi.y),
            )
        })
        .collect();
    let capacity = instance.fleet().capacity;
    let xs: Vec<f64> = scaled.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = scaled.iter().map(|p| p.y).collect();
    let ss: Vec<f64> = known.iter().map(|r| r.volume / capacity).collect();
    let (mu_x, sd_x, skew_x) = moments(&xs, options.moment_mode);
    let (mu_y, sd_y, skew_y) = moments(&ys, options.moment_mode);
    let (mu_s, sd_s, skew_s) = moments(&ss, options.moment_mode);

    let mut gap = gap_statistic(&scaled, &options.gap, options.seed)?;
    let total: f64 = known.iter().map(|r| r.volume).sum();
    gap.m_v = ((total / capacity - 1e-9).ceil().max(1.0)) as usize;
    let nc = (1.0 - gap.m_v as f64 / gap.k_gap as f64).abs();
    Ok((
        FeatureVector {
            mu_x,
            sd_x,
            skew_x,
            mu_y,
            sd_y,
            skew_y,
            mu_s,
            sd_s,
            skew_s,
            nc,
        },
        gap,
    ))
}

/// CSV with header `name,mu_x,…,nc`; values with six decimals.
pub fn features_csv(rows: &[(String, FeatureVector)]) -> String {
    let mut out = String::from("name");
    for n in FeatureVector::NAMES {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (name, f) in rows {
        out.push_str(name);
        for v in f.to_array() {
            let _ = write!(out, ",{v:.6}");
        }
        out.push('\n');
    }
    out
}

/// Reads rows written by [`features_csv`] (extra columns are ignored).
pub fn parse_features_csv(text: &str) -> Result<Vec<(String, FeatureVector)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DvrpError::parse(1, format!("missing column '{name}'")))
    };
    let name_col = column("name")?;
    let cols: Vec<usize> = FeatureVector::NAMES
        .iter()
        .map(|n| column(n))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let mut values = [0.0; 10];
        for (slot, &c) in values.iter_mut().zip(&cols) {
            let field = record.get(c).unwrap_or("");
            *slot = field
                .parse()
                .map_err(|_| DvrpError::parse(line, format!("'{field}' is not a number")))?;
        }
        rows.push((
            record.get(name_col).unwrap_or("").to_string(),
            FeatureVector::from_array(values),
        ));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{InstanceBuilder, Request, RequestId};

    #[test]
    fn symmetric_sample_has_no_skew() {
        assert_eq!(sample_skewness(&[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn skew_by_hand() {
        // Mean 1/4; m2 = (3·(1/16) + 9/16)/4 = 3/16;
        // m3 = (3·(−1/64) + 27/64)/4 = 24/256 = 3/32; g1 = (3/32)/(3/16)^1.5.
        let expected = (3.0 / 32.0) / (3.0f64 / 16.0).powf(1.5);
        assert!((sample_skewness(&[0.0, 0.0, 0.0, 1.0]) - expected).abs() < 1e-15);
        assert!((sample_skewness(&[0.0, 0.0, 0.0, -1.0]) + expected).abs() < 1e-15);
    }

    #[test]
    fn constant_sample_is_degenerate() {
        for mode in [
            MomentMode::Population,
            MomentMode::Sample,
            MomentMode::Adjusted,
        ] {
            let (mean, sd, skew) = moments(&[0.2; 7], mode);
            assert!((mean - 0.2).abs() < 1e-15);
            assert_eq!((sd, skew), (0.0, 0.0));
        }
    }

    #[test]
    fn identical_points_have_one_cluster() {
        let pts = vec![Point::new(0.3, 0.3); 12];
        let g = gap_statistic(&pts, &GapConfig::default(), 1).unwrap();
        assert_eq!(g.k_gap, 1);
    }

    #[test]
    fn equal_volumes() {
        let inst = InstanceBuilder::new("eq", Point::new(0.0, 0.0), 100.0, 100.0)
            .requests((0..6).map(|i| Request {
                id: RequestId(i + 1),
                location: Point::new(f64::from(i), f64::from(i * i)),
                volume: 5.0,
                service_time: 0.0,
                arrival_time: 0.0,
            }))
            .build()
            .unwrap();
        let (f, g) = extract_features(&inst, &FeatureOptions::default()).unwrap();
        assert!((f.mu_s - 0.05).abs() < 1e-15);
        assert_eq!((f.sd_s, f.skew_s), (0.0, 0.0));
        assert_eq!(g.m_v, 1);
    }

    #[test]
    fn csv_round_trip() {
        let f = FeatureVector::from_array([0.5, 0.25, -0.125, 0.5, 0.25, 0.0, 0.1, 0.05, 1.5, 2.0]);
        let text = features_csv(&[("x".into(), f)]);
        assert_eq!(
            parse_features_csv(&text).unwrap(),
            vec![("x".to_string(), f)]
        );
    }
}
