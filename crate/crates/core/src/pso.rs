//! Particle swarm optimization over real vectors and over residue vectors
//! in `Z_m^n`.
//!
//! Both swarms minimize. Each particle remembers its own best position and
//! tracks the best personal best within its neighborhood (whole swarm for
//! [`Topology::Global`], `k` neighbors on each side for [`Topology::Ring`]).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DvrpError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Global,
    Ring(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmConfig {
    pub particle_count: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub topology: Topology,
    /// Per-dimension velocity bound (continuous swarms only).
    pub velocity_clamp: Option<f64>,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            particle_count: 40,
            inertia: 0.7298,
            cognitive: 1.4962,
            social: 1.4962,
            topology: Topology::Global,
            velocity_clamp: None,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particle_count < 2 {
            return Err(DvrpError::Config(format!(
                "particle_count must be at least 2, got {}",
                self.particle_count
            )));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(DvrpError::Config(format!("{name} must be finite and >= 0")));
            }
        }
        if let Some(c) = self.velocity_clamp {
            if c.is_nan() || c <= 0.0 {
                return Err(DvrpError::Config("velocity_clamp must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_particles(mut self, particle_count: usize) -> Self {
        self.particle_count = particle_count;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Particle<T> {
    pub position: Vec<T>,
    pub velocity: Vec<T>,
    pub value: f64,
    pub best_position: Vec<T>,
    pub best_value: f64,
    /// Index of the particle whose personal best is this particle's
    /// neighborhood best.
    pub neighborhood_best: usize,
}

fn sanitize(value: f64) -> f64 {
    if value.is_finite() {
        value
    } else {
        log::warn!("non-finite fitness {value} treated as +inf");
        f64::INFINITY
    }
}

fn neighborhood(topology: Topology, n: usize, i: usize) -> impl Iterator<Item = usize> {
    let (lo, hi) = match topology {
        Topology::Global => (0, n),
        Topology::Ring(k) => {
            let k = k.min(n / 2);
            (n + i - k, n + i + k + 1)
        }
    };
    (lo..hi).map(move |j| j % n)
}

fn refresh_neighborhoods<T>(particles: &mut [Particle<T>], topology: Topology) {
    let n = particles.len();
    let global = match topology {
        Topology::Global => Some(best_index(particles)),
        Topology::Ring(_) => None,
    };
    for i in 0..n {
        let best = global.unwrap_or_else(|| {
            let mut best = i;
            for j in neighborhood(topology, n, i) {
                if particles[j].best_value < particles[best].best_value
                    || (particles[j].best_value == particles[best].best_value && j < best)
                {
                    best = j;
                }
            }
            best
        });
        particles[i].neighborhood_best = best;
    }
}

fn best_index<T>(particles: &[Particle<T>]) -> usize {
    let mut best = 0;
    for (j, p) in particles.iter().enumerate() {
        if p.best_value < particles[best].best_value {
            best = j;
        }
    }
    best
}

fn record<T: Clone>(p: &mut Particle<T>, value: f64) {
    p.value = value;
    if value < p.best_value {
        p.best_value = value;
        p.best_position.clone_from(&p.position);
    }
}

/// Real-valued swarm: `v ← ω v + u1 c1 (pbest − x) + u2 c2 (nbest − x)`,
/// then `x ← x + v`, with `u1, u2` drawn per component from `U[0, 1]`.
#[derive(Clone, Debug)]
pub struct ContinuousSwarm {
    config: SwarmConfig,
    particles: Vec<Particle<f64>>,
    rng: ChaCha8Rng,
    evaluations: u64,
}

impl ContinuousSwarm {
    /// Builds a swarm from explicit starting points and evaluates them once.
    pub fn new<F>(
        config: SwarmConfig,
        positions: Vec<Vec<f64>>,
        velocities: Vec<Vec<f64>>,
        fitness: &mut F,
    ) -> Result<Self>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::with_rng(config, positions, velocities, rng, fitness)
    }

    fn with_rng<F>(
        config: SwarmConfig,
        positions: Vec<Vec<f64>>,
        velocities: Vec<Vec<f64>>,
        rng: ChaCha8Rng,
        fitness: &mut F,
    ) -> Result<Self>
    where
        F: FnMut(&[f64]) -> f64,
    {
        config.validate()?;
        if positions.len() != config.particle_count || velocities.len() != positions.len() {
            return Err(DvrpError::Config(format!(
                "expected {} positions and velocities",
                config.particle_count
            )));
        }
        let dim = positions[0].len();
        if positions.iter().chain(&velocities).any(|p| p.len() != dim) {
            return Err(DvrpError::Config("ragged swarm dimensions".into()));
        }
        let mut particles: Vec<Particle<f64>> = positions
            .into_iter()
            .zip(velocities)
            .map(|(position, velocity)| {
                let value = sanitize(fitness(&position));
                Particle {
                    best_position: position.clone(),
                    position,
                    velocity,
                    value,
                    best_value: value,
                    neighborhood_best: 0,
                }
            })
            .collect();
        refresh_neighborhoods(&mut particles, config.topology);
        Ok(ContinuousSwarm {
            evaluations: particles.len() as u64,
            config,
            particles,
            rng,
        })
    }

    /// Uniform random start inside `[lower, upper]`, velocities uniform in
    /// `±(upper − lower) / 2`. `seeds` replace the first positions.
    pub fn uniform<F>(
        config: SwarmConfig,
        lower: &[f64],
        upper: &[f64],
        seeds: &[Vec<f64>],
        fitness: &mut F,
    ) -> Result<Self>
    where
        F: FnMut(&[f64]) -> f64,
    {
        config.validate()?;
        if lower.len() != upper.len() {
            return Err(DvrpError::Config("bound dimensions differ".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut positions = Vec::with_capacity(config.particle_count);
        let mut velocities = Vec::with_capacity(config.particle_count);
        for i in 0..config.particle_count {
            let mut x = Vec::with_capacity(lower.len());
            let mut v = Vec::with_capacity(lower.len());
            for (&lo, &hi) in lower.iter().zip(upper) {
                let span = hi - lo;
                x.push(lo + rng.random::<f64>() * span);
                v.push((rng.random::<f64>() - 0.5) * span);
            }
            if let Some(s) = seeds.get(i) {
                if s.len() != lower.len() {
                    return Err(DvrpError::Config(
                        "seed position has wrong dimension".into(),
                    ));
                }
                x.clone_from(s);
            }
            positions.push(x);
            velocities.push(v);
        }
        Self::with_rng(config, positions, velocities, rng, fitness)
    }

    pub fn step<F>(&mut self, fitness: &mut F)
    where
        F: FnMut(&[f64]) -> f64,
    {
        let SwarmConfig {
            inertia: w,
            cognitive: c1,
            social: c2,
            velocity_clamp,
            ..
        } = self.config;
        let nbest: Vec<usize> = self.particles.iter().map(|p| p.neighborhood_best).collect();
        for i in 0..self.particles.len() {
            let social_pos = self.particles[nbest[i]].best_position.clone();
            let p = &mut self.particles[i];
            for d in 0..p.position.len() {
                let u1: f64 = self.rng.random();
                let u2: f64 = self.rng.random();
                let x = p.position[d];
                let mut v = w * p.velocity[d]
                    + u1 * c1 * (p.best_position[d] - x)
                    + u2 * c2 * (social_pos[d] - x);
                if let Some(c) = velocity_clamp {
                    v = v.clamp(-c, c);
                }
                p.velocity[d] = v;
                p.position[d] = x + v;
            }
            let value = sanitize(fitness(&p.position));
            record(p, value);
        }
        self.evaluations += self.particles.len() as u64;
        refresh_neighborhoods(&mut self.particles, self.config.topology);
    }

    /// Steps while a full sweep still fits in `budget` total evaluations.
    pub fn run<F>(&mut self, budget: u64, fitness: &mut F)
    where
        F: FnMut(&[f64]) -> f64,
    {
        while self.evaluations + self.particles.len() as u64 <= budget {
            self.step(fitness);
        }
    }

    pub fn best(&self) -> (&[f64], f64) {
        let p = &self.particles[best_index(&self.particles)];
        (&p.best_position, p.best_value)
    }

    pub fn particles(&self) -> &[Particle<f64>] {
        &self.particles
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn config(&self) -> &SwarmConfig {
        &self.config
    }
}

/// `(x + v) mod m` componentwise.
pub fn add_mod(x: &[u32], v: &[u32], m: u32) -> Vec<u32> {
    x.iter()
        .zip(v)
        .map(|(&a, &b)| ((a as u64 + b as u64) % m as u64) as u32)
        .collect()
}

#[inline]
fn sub_mod(a: u32, b: u32, m: u32) -> u32 {
    ((a as u64 + m as u64 - (b % m) as u64) % m as u64) as u32
}

/// Swarm over `{0, …, m−1}^n` with arithmetic in `Z_m`.
///
/// Each velocity component becomes one of the three contributions of the
/// continuous rule, reduced mod `m`: the old velocity, `pbest − x`, or
/// `nbest − x`, drawn with probabilities proportional to `ω`, `c1`, `c2`.
/// The position then moves to `(x + v) mod m`.
#[derive(Clone, Debug)]
pub struct DiscreteSwarm {
    config: SwarmConfig,
    modulus: u32,
    particles: Vec<Particle<u32>>,
    rng: ChaCha8Rng,
    evaluations: u64,
}

impl DiscreteSwarm {
    pub fn new<F>(
        config: SwarmConfig,
        modulus: u32,
        positions: Vec<Vec<u32>>,
        velocities: Vec<Vec<u32>>,
        fitness: &mut F,
    ) -> Result<Self>
    where
        F: FnMut(&[u32]) -> f64,
    {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::with_rng(config, modulus, positions, velocities, rng, fitness)
    }

    fn with_rng<F>(
        config: SwarmConfig,
        modulus: u32,
        positions: Vec<Vec<u32>>,
        velocities: Vec<Vec<u32>>,
        rng: ChaCha8Rng,
        fitness: &mut F,
    ) -> Result<Self>
    where
        F: FnMut(&[u32]) -> f64,
    {
        let mut swarm = Self::from_parts(config, modulus, positions, velocities, rng)?;
        swarm.reevaluate(fitness);
        Ok(swarm)
    }

    /// Builds a swarm without evaluating it; personal bests start at +inf
    /// until [`Self::reevaluate`] runs.
    pub fn unevaluated(
        config: SwarmConfig,
        modulus: u32,
        positions: Vec<Vec<u32>>,
        velocities: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::from_parts(config, modulus, positions, velocities, rng)
    }

    fn from_parts(
        config: SwarmConfig,
        modulus: u32,
        positions: Vec<Vec<u32>>,
        velocities: Vec<Vec<u32>>,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        config.validate()?;
        if modulus < 1 {
            return Err(DvrpError::Config("modulus must be at least 1".into()));
        }
        if positions.len() != config.particle_count || velocities.len() != positions.len() {
            return Err(DvrpError::Config(format!(
                "expected {} positions and velocities",
                config.particle_count
            )));
        }
        let dim = positions[0].len();
        if positions.iter().chain(&velocities).any(|p| p.len() != dim) {
            return Err(DvrpError::Config("ragged swarm dimensions".into()));
        }
        let particles = positions
            .into_iter()
            .zip(velocities)
            .map(|(mut position, mut velocity)| {
                position.iter_mut().for_each(|x| *x %= modulus);
                velocity.iter_mut().for_each(|v| *v %= modulus);
                Particle {
                    best_position: position.clone(),
                    position,
                    velocity,
                    value: f64::INFINITY,
                    best_value: f64::INFINITY,
                    neighborhood_best: 0,
                }
            })
            .collect();
        Ok(DiscreteSwarm {
            config,
            modulus,
            particles,
            rng,
            evaluations: 0,
        })
    }

    /// Uniform random positions and velocities; `seeds` replace the first positions.
    pub fn uniform<F>(
        config: SwarmConfig,
        modulus: u32,
        dim: usize,
        seeds: &[Vec<u32>],
        fitness: &mut F,
    ) -> Result<Self>
    where
        F: FnMut(&[u32]) -> f64,
    {
        config.validate()?;
        if modulus < 1 {
            return Err(DvrpError::Config("modulus must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut positions = Vec::with_capacity(config.particle_count);
        let mut velocities = Vec::with_capacity(config.particle_count);
        for i in 0..config.particle_count {
            let mut x: Vec<u32> = (0..dim).map(|_| rng.random_range(0..modulus)).collect();
            let v: Vec<u32> = (0..dim).map(|_| rng.random_range(0..modulus)).collect();
            if let Some(s) = seeds.get(i) {
                x.clone_from(s);
            }
            positions.push(x);
            velocities.push(v);
        }
        Self::with_rng(config, modulus, positions, velocities, rng, fitness)
    }

    pub fn step<F>(&mut self, fitness: &mut F)
    where
        F: FnMut(&[u32]) -> f64,
    {
        let m = self.modulus;
        let (w, c1, c2) = (
            self.config.inertia,
            self.config.cognitive,
            self.config.social,
        );
        let total = w + c1 + c2;
        let nbest: Vec<usize> = self.particles.iter().map(|p| p.neighborhood_best).collect();
        for i in 0..self.particles.len() {
            let social_pos = self.particles[nbest[i]].best_position.clone();
            let p = &mut self.particles[i];
            for d in 0..p.position.len() {
                let x = p.position[d];
                let v = if total > 0.0 {
                    let r = self.rng.random::<f64>() * total;
                    if r < w {
                        p.velocity[d]
                    } else if r < w + c1 {
                        sub_mod(p.best_position[d], x, m)
                    } else {
                        sub_mod(social_pos[d], x, m)
                    }
                } else {
                    0
                };
                p.velocity[d] = v;
                p.position[d] = ((x as u64 + v as u64) % m as u64) as u32;
            }
            let value = sanitize(fitness(&p.position));
            record(p, value);
        }
        self.evaluations += self.particles.len() as u64;
        refresh_neighborhoods(&mut self.particles, self.config.topology);
    }

    pub fn run<F>(&mut self, budget: u64, fitness: &mut F)
    where
        F: FnMut(&[u32]) -> f64,
    {
        while self.evaluations + self.particles.len() as u64 <= budget {
            self.step(fitness);
        }
    }

    /// Evaluates every current position and restarts the personal bests
    /// from them. Used after the fitness landscape has changed.
    pub fn reevaluate<F>(&mut self, fitness: &mut F)
    where
        F: FnMut(&[u32]) -> f64,
    {
        for p in &mut self.particles {
            let value = sanitize(fitness(&p.position));
            p.value = value;
            p.best_value = value;
            p.best_position.clone_from(&p.position);
        }
        self.evaluations += self.particles.len() as u64;
        refresh_neighborhoods(&mut self.particles, self.config.topology);
    }

    /// Grows the residue space; existing residues stay valid.
    pub fn set_modulus(&mut self, modulus: u32) {
        assert!(modulus >= self.modulus, "modulus may only grow");
        self.modulus = modulus;
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn best(&self) -> (&[u32], f64) {
        let p = &self.particles[best_index(&self.particles)];
        (&p.best_position, p.best_value)
    }

    pub fn particles(&self) -> &[Particle<u32>] {
        &self.particles
    }

    /// Direct access for knowledge transfer; call [`Self::reevaluate`] afterwards.
    pub fn particles_mut(&mut self) -> &mut [Particle<u32>] {
        &mut self.particles
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn reset_evaluations(&mut self) {
        self.evaluations = 0;
    }

    pub fn config(&self) -> &SwarmConfig {
        &self.config
    }
}
