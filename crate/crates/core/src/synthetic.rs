//! Seeded random instances for tests, benchmarks and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{InstanceBuilder, Point, ProblemInstance, Request, RequestId};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Uniform over the square.
    Uniform,
    /// Gaussian blobs around a few random centers.
    Clustered,
    /// Half uniform, half clustered.
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub name: String,
    pub requests: usize,
    pub layout: Layout,
    /// Share of requests known at the start of the day.
    pub a_priori_share: f64,
    pub side: f64,
    pub capacity: f64,
    pub workday_end: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(name: impl Into<String>, requests: usize, layout: Layout, seed: u64) -> Self {
        SyntheticSpec {
            name: name.into(),
            requests,
            layout,
            a_priori_share: 0.5,
            side: 100.0,
            capacity: 100.0,
            workday_end: 1000.0,
            seed,
        }
    }

    pub fn all_a_priori(mut self) -> Self {
        self.a_priori_share = 1.0;
        self
    }

    /// Volumes are integers in `1..=30`, service times in `5..=15`; the
    /// depot sits at the center and dynamic requests arrive before the
    /// cut-off at half the day.
    pub fn build(&self) -> Result<ProblemInstance> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let s = self.side;
        let blobs: Vec<Point> = (0..4)
            .map(|_| {
                Point::new(
                    rng.random_range(0.15 * s..0.85 * s),
                    rng.random_range(0.15 * s..0.85 * s),
                )
            })
            .collect();
        let cutoff = self.workday_end / 2.0;
        let requests = (0..self.requests)
            .map(|i| {
                let clustered = match self.layout {
                    Layout::Uniform => false,
                    Layout::Clustered => true,
                    Layout::Mixed => i % 2 == 1,
                };
                let location = if clustered {
                    let c = blobs[rng.random_range(0..blobs.len())];
                    let (g1, g2) = gaussian_pair(&mut rng);
                    Point::new(
                        (c.x + 0.06 * s * g1).clamp(0.0, s),
                        (c.y + 0.06 * s * g2).clamp(0.0, s),
                    )
                } else {
                    Point::new(rng.random_range(0.0..s), rng.random_range(0.0..s))
                };
                let arrival_time = if rng.random::<f64>() < self.a_priori_share {
                    0.0
                } else {
                    rng.random_range(0.0..cutoff)
                };
                Request {
                    id: RequestId(i as u32 + 1),
                    location,
                    volume: f64::from(rng.random_range(1..=30u32)),
                    service_time: f64::from(rng.random_range(5..=15u32)),
                    arrival_time,
                }
            })
            .collect::<Vec<_>>();
        InstanceBuilder::new(
            &self.name,
            Point::new(s / 2.0, s / 2.0),
            self.capacity,
            self.workday_end,
        )
        .cutoff(cutoff)
        .requests(requests)
        .build()
    }
}

/// Box-Muller.
fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = std::f64::consts::TAU * u2;
    (r * t.cos(), r * t.sin())
}
