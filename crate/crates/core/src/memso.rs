//! Discrete multi-swarm solver.
//!
//! A particle is an assignment vector: entry `j` names the vehicle that
//! serves the `j`-th free request. Decoding inserts each vehicle's requests
//! greedily after its committed prefix and polishes the open part with
//! 2-OPT; the fitness is the total length plus penalties for capacity and
//! working-day overruns. Between slices the whole population is carried
//! over: committed requests drop out of the vectors and new requests are
//! appended with the vehicle a cheapest insertion would pick.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{path_length, Node, ProblemInstance, RequestId, Solution};
use crate::dynamics::{DvrpSolver, FrozenSnapshot};
use crate::error::{DvrpError, Result};
use crate::local_search::{cheapest_position, two_opt_path};
use crate::pso::{DiscreteSwarm, SwarmConfig};

/// Penalty per unit of capacity or time overrun: ten bounding-box diagonals.
pub fn default_penalty_weight(instance: &ProblemInstance) -> f64 {
    let b = instance.bounding_box();
    let diag = b.min.distance(&b.max);
    10.0 * if diag > 0.0 { diag } else { 1.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemsoConfig {
    pub swarm: SwarmConfig,
    /// Independent swarms per slice.
    #[serde(rename = "S", alias = "swarms")]
    pub swarms: usize,
    /// Overrides [`default_penalty_weight`].
    pub penalty_weight: Option<f64>,
    /// Spare vehicles on top of the capacity lower bound in the residue space.
    pub vehicle_slack: usize,
}

impl Default for MemsoConfig {
    fn default() -> Self {
        MemsoConfig {
            swarm: SwarmConfig::default(),
            swarms: 1,
            penalty_weight: None,
            vehicle_slack: 1,
        }
    }
}

impl MemsoConfig {
    pub fn validate(&self) -> Result<()> {
        self.swarm.validate()?;
        if self.swarms == 0 {
            return Err(DvrpError::Config("S must be at least 1".into()));
        }
        if let Some(w) = self.penalty_weight {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(DvrpError::Config("penalty_weight must be >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn min_budget(&self) -> u64 {
        (self.swarm.particle_count * self.swarms) as u64
    }
}

/// Sweep partitions placed in every initial swarm.
pub const SWEEP_SEEDS: usize = 8;

/// Vehicle index per free request, in snapshot order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentGenome(pub Vec<u32>);

/// Turns assignment vectors into routes for one snapshot.
pub(crate) struct Decoder<'s, 'a> {
    snapshot: &'s FrozenSnapshot<'a>,
    free: Vec<Node>,
    prefixes: Vec<Vec<Node>>,
    penalty_weight: f64,
}

impl<'s, 'a> Decoder<'s, 'a> {
    pub(crate) fn new(snapshot: &'s FrozenSnapshot<'a>, penalty_weight: f64) -> Self {
        Decoder {
            free: snapshot.free_nodes(),
            prefixes: snapshot.commitment.prefix_nodes(snapshot.instance),
            snapshot,
            penalty_weight,
        }
    }

    fn start_of(&self, v: usize) -> Node {
        match self.prefixes.get(v) {
            Some(p) if !p.is_empty() => *p.last().expect("non-empty"),
            _ => 0,
        }
    }

    /// Full routes (committed prefix included) for every vehicle index
    /// that appears in the genome or carries a commitment.
    pub(crate) fn routes(&self, genome: &[u32]) -> Vec<Vec<Node>> {
        let inst = self.snapshot.instance;
        let vehicles = genome
            .iter()
            .map(|&v| v as usize + 1)
            .max()
            .unwrap_or(0)
            .max(self.snapshot.commitment.used_vehicle_span());
        let mut suffixes: Vec<Vec<Node>> = vec![Vec::new(); vehicles];
        for (&node, &v) in self.free.iter().zip(genome) {
            let v = v as usize;
            let start = self.start_of(v);
            let (pos, _) = cheapest_position(inst, start, &suffixes[v], node);
            suffixes[v].insert(pos, node);
        }
        suffixes
            .into_iter()
            .enumerate()
            .map(|(v, mut suffix)| {
                two_opt_path(inst, self.start_of(v), &mut suffix);
                let mut route = self.prefixes.get(v).cloned().unwrap_or_default();
                route.extend(suffix);
                route
            })
            .collect()
    }

    pub(crate) fn cost_of_routes(&self, routes: &[Vec<Node>]) -> f64 {
        let inst = self.snapshot.instance;
        routes
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.is_empty())
            .map(|(v, r)| {
                path_length(inst, 0, r) + self.penalty_weight * self.snapshot.route_violation(v, r)
            })
            .sum()
    }

    pub(crate) fn fitness(&self, genome: &[u32]) -> f64 {
        self.cost_of_routes(&self.routes(genome))
    }

    /// Vehicle below `vehicles` whose cheapest slot for `node` is shortest,
    /// preferring slots that keep the route feasible. Ties go to the lowest
    /// vehicle index.
    pub(crate) fn greedy_vehicle(&self, routes: &[Vec<Node>], node: Node, vehicles: usize) -> u32 {
        let inst = self.snapshot.instance;
        let mut best: Option<(bool, f64, usize)> = None;
        let mut candidate = Vec::new();
        for v in 0..vehicles {
            let route: &[Node] = routes.get(v).map(Vec::as_slice).unwrap_or(&[]);
            let prefix_len = self.prefixes.get(v).map_or(0, Vec::len).min(route.len());
            let (pos, delta) =
                cheapest_position(inst, self.start_of(v), &route[prefix_len..], node);
            candidate.clear();
            candidate.extend_from_slice(route);
            candidate.insert(prefix_len + pos, node);
            let feasible = self.snapshot.route_violation(v, &candidate) == 0.0;
            let better = match best {
                None => true,
                Some((bf, bd, _)) => (feasible && !bf) || (feasible == bf && delta < bd),
            };
            if better {
                best = Some((feasible, delta, v));
            }
        }
        best.map_or(0, |b| b.2 as u32)
    }

    /// Assignment produced by inserting the free requests one after another.
    pub(crate) fn greedy_genome(&self, vehicles: usize) -> Vec<u32> {
        let inst = self.snapshot.instance;
        let mut routes = self.prefixes.clone();
        routes.resize(routes.len().max(vehicles), Vec::new());
        let mut genome = Vec::with_capacity(self.free.len());
        for &node in &self.free {
            let v = self.greedy_vehicle(&routes, node, vehicles);
            let vi = v as usize;
            let prefix_len = self.prefixes.get(vi).map_or(0, Vec::len);
            let (pos, _) =
                cheapest_position(inst, self.start_of(vi), &routes[vi][prefix_len..], node);
            routes[vi].insert(prefix_len + pos, node);
            genome.push(v);
        }
        genome
    }

    /// Sweep partition: free requests sorted by polar angle around the
    /// depot (starting at `start_angle`) fill vehicles one after another.
    /// Overflow past the last vehicle goes to the one with the most room.
    pub(crate) fn sweep_genome(&self, vehicles: usize, start_angle: f64) -> Vec<u32> {
        let inst = self.snapshot.instance;
        let depot = inst.depot();
        let capacity = inst.fleet().capacity;
        let mut room: Vec<f64> = (0..vehicles)
            .map(|v| {
                self.snapshot
                    .commitment
                    .vehicles
                    .get(v)
                    .map_or(capacity, |c| c.remaining_capacity)
            })
            .collect();
        let angle = |n: Node| {
            let p = inst.node_point(n);
            ((p.y - depot.y).atan2(p.x - depot.x) - start_angle).rem_euclid(std::f64::consts::TAU)
        };
        let mut order: Vec<usize> = (0..self.free.len()).collect();
        order.sort_by(|&a, &b| {
            angle(self.free[a])
                .total_cmp(&angle(self.free[b]))
                .then(a.cmp(&b))
        });
        let mut genome = vec![0; self.free.len()];
        let mut v = 0;
        for j in order {
            let q = inst.node_volume(self.free[j]);
            while v < vehicles && q > room[v] + crate::domain::FEASIBILITY_EPS {
                v += 1;
            }
            let target = if v < vehicles {
                v
            } else {
                (0..vehicles)
                    .max_by(|&a, &b| room[a].total_cmp(&room[b]).then(b.cmp(&a)))
                    .unwrap_or(0)
            };
            room[target] -= q;
            genome[j] = target as u32;
        }
        genome
    }

    pub(crate) fn solution(&self, genome: &[u32]) -> Solution {
        let mut routes = self.routes(genome);
        let span = routes
            .iter()
            .rposition(|r| !r.is_empty())
            .map_or(0, |i| i + 1);
        routes.truncate(span);
        Solution::from_nodes(&routes, self.snapshot.instance)
    }
}

fn penalty_weight(config: &MemsoConfig, instance: &ProblemInstance) -> f64 {
    config
        .penalty_weight
        .unwrap_or_else(|| default_penalty_weight(instance))
}

/// Fitness of an assignment vector on `snapshot`.
pub fn memso_fitness(
    genome: &AssignmentGenome,
    snapshot: &FrozenSnapshot<'_>,
    penalty_weight: f64,
) -> f64 {
    Decoder::new(snapshot, penalty_weight).fitness(&genome.0)
}

/// Number of vehicle identifiers the residue space needs for `snapshot`.
fn active_vehicles(snapshot: &FrozenSnapshot<'_>, slack: usize, previous: usize) -> usize {
    let inst = snapshot.instance;
    let committed: f64 = snapshot
        .commitment
        .vehicles
        .iter()
        .map(|v| inst.fleet().capacity - v.remaining_capacity)
        .sum();
    let bound = ((committed + snapshot.free_volume()) / inst.fleet().capacity - 1e-9).ceil();
    let needed = (bound.max(0.0) as usize + slack)
        .max(previous)
        .max(snapshot.commitment.used_vehicle_span())
        .max(1);
    needed.min(inst.fleet().vehicle_count)
}

/// Population carried between slices.
#[derive(Clone, Debug)]
pub struct MemsoState {
    swarms: Vec<DiscreteSwarm>,
    /// Request behind each genome dimension.
    free_ids: Vec<RequestId>,
    /// Requests removed from the genomes because they were committed.
    blocked: BTreeSet<RequestId>,
    vehicles: usize,
    /// Particles must be re-evaluated before the next search.
    stale: bool,
}

impl MemsoState {
    /// Fresh population for the first snapshot. Each swarm starts with sweep
    /// partitions from [`SWEEP_SEEDS`] evenly spaced angles and the
    /// greedy-insertion assignment; the remaining particles are uniform
    /// random.
    pub fn initial(snapshot: &FrozenSnapshot<'_>, config: &MemsoConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let inst = snapshot.instance;
        let vehicles = active_vehicles(snapshot, config.vehicle_slack, 1);
        let decoder = Decoder::new(snapshot, penalty_weight(config, inst));
        let mut seeds: Vec<Vec<u32>> = (0..SWEEP_SEEDS)
            .map(|i| {
                decoder.sweep_genome(
                    vehicles,
                    std::f64::consts::TAU * i as f64 / SWEEP_SEEDS as f64,
                )
            })
            .collect();
        seeds.push(decoder.greedy_genome(vehicles));
        let dim = seeds[0].len();
        let mut seeder = ChaCha8Rng::seed_from_u64(seed);
        let m = vehicles as u32;
        let swarms = (0..config.swarms)
            .map(|_| {
                let mut rng = ChaCha8Rng::seed_from_u64(seeder.random());
                let n = config.swarm.particle_count;
                let positions: Vec<Vec<u32>> = (0..n)
                    .map(|i| {
                        if let Some(seed) = seeds.get(i) {
                            seed.clone()
                        } else {
                            (0..dim).map(|_| rng.random_range(0..m)).collect()
                        }
                    })
                    .collect();
                let velocities: Vec<Vec<u32>> = (0..n)
                    .map(|_| (0..dim).map(|_| rng.random_range(0..m)).collect())
                    .collect();
                let cfg = config.swarm.clone().with_seed(rng.random());
                DiscreteSwarm::unevaluated(cfg, m, positions, velocities)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MemsoState {
            swarms,
            free_ids: snapshot.free_requests.iter().map(|r| r.id).collect(),
            blocked: BTreeSet::new(),
            vehicles,
            stale: true,
        })
    }

    pub fn free_ids(&self) -> &[RequestId] {
        &self.free_ids
    }

    pub fn blocked(&self) -> &BTreeSet<RequestId> {
        &self.blocked
    }

    pub fn vehicles(&self) -> usize {
        self.vehicles
    }

    pub fn swarms(&self) -> &[DiscreteSwarm] {
        &self.swarms
    }

    /// Best personal-best genome across all swarms.
    pub fn best_genome(&self) -> (AssignmentGenome, f64) {
        let mut best: Option<(&[u32], f64)> = None;
        for s in &self.swarms {
            let (g, v) = s.best();
            if best.is_none_or(|b| v < b.1) {
                best = Some((g, v));
            }
        }
        let (g, v) = best.expect("at least one swarm");
        (AssignmentGenome(g.to_vec()), v)
    }
}

/// Runs the swarms on `snapshot` until `budget` fitness evaluations are spent.
pub fn memso_optimize(
    mut state: MemsoState,
    snapshot: &FrozenSnapshot<'_>,
    budget: u64,
    config: &MemsoConfig,
) -> Result<(Solution, MemsoState)> {
    if budget < config.min_budget() {
        return Err(DvrpError::Config(format!(
            "budget {budget} below one sweep of {} evaluations",
            config.min_budget()
        )));
    }
    if state.free_ids.len() != snapshot.free_requests.len() {
        return Err(DvrpError::Solver("state does not match snapshot".into()));
    }
    let decoder = Decoder::new(snapshot, penalty_weight(config, snapshot.instance));
    let mut fitness = |g: &[u32]| decoder.fitness(g);
    let count = state.swarms.len() as u64;
    for (s, swarm) in state.swarms.iter_mut().enumerate() {
        let share = budget / count + if s == 0 { budget % count } else { 0 };
        swarm.reset_evaluations();
        if state.stale {
            swarm.reevaluate(&mut fitness);
        }
        swarm.run(share, &mut fitness);
    }
    state.stale = false;
    let (genome, _) = state.best_genome();
    Ok((decoder.solution(&genome.0), state))
}

/// Adapts the population to `snapshot`, the next slice after the one the
/// state was last optimized on.
pub fn memso_transfer(
    mut state: MemsoState,
    snapshot: &FrozenSnapshot<'_>,
    config: &MemsoConfig,
) -> MemsoState {
    let inst = snapshot.instance;
    let decoder = Decoder::new(snapshot, penalty_weight(config, inst));
    let vehicles = active_vehicles(snapshot, config.vehicle_slack, state.vehicles);

    // Best genome of all swarms replaces the worst particle of the others.
    if state.swarms.len() > 1 {
        let (best, value) = state.best_genome();
        for swarm in &mut state.swarms {
            let worst = swarm
                .particles()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.best_value.total_cmp(&b.1.best_value))
                .map(|(i, _)| i)
                .expect("non-empty swarm");
            let p = &mut swarm.particles_mut()[worst];
            if value < p.best_value {
                p.best_position.clone_from(&best.0);
                p.best_value = value;
            }
        }
    }

    let new_ids: Vec<RequestId> = snapshot.free_requests.iter().map(|r| r.id).collect();
    let position_of: HashMap<RequestId, usize> = state
        .free_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i))
        .collect();
    let committed = snapshot.commitment.committed_ids();
    for id in &state.free_ids {
        if committed.contains(id) {
            state.blocked.insert(*id);
        }
    }
    let unchanged = new_ids == state.free_ids && vehicles == state.vehicles;

    if !unchanged {
        let kept: Vec<Option<usize>> = new_ids
            .iter()
            .map(|id| position_of.get(id).copied())
            .collect();
        let new_nodes: Vec<(usize, Node)> = kept
            .iter()
            .enumerate()
            .filter(|(_, k)| k.is_none())
            .map(|(j, _)| (j, inst.node_of(new_ids[j]).expect("snapshot ids are known")))
            .collect();
        let kept_dims: Vec<usize> = kept.iter().filter_map(|k| *k).collect();
        for swarm in &mut state.swarms {
            swarm.set_modulus(vehicles as u32);
            for p in swarm.particles_mut() {
                let mut genome: Vec<u32> = kept
                    .iter()
                    .map(|k| k.map_or(0, |i| p.best_position[i]))
                    .collect();
                let mut velocity: Vec<u32> = kept
                    .iter()
                    .map(|k| k.map_or(0, |i| p.velocity[i]))
                    .collect();
                if !new_nodes.is_empty() {
                    // Decode the kept part, then place each newcomer greedily.
                    let mut partial = Vec::with_capacity(kept_dims.len());
                    let mut partial_genome = Vec::with_capacity(kept_dims.len());
                    for (j, k) in kept.iter().enumerate() {
                        if k.is_some() {
                            partial.push(j);
                            partial_genome.push(genome[j]);
                        }
                    }
                    let mut routes = decoder.partial_routes(&partial, &partial_genome, vehicles);
                    for &(j, node) in &new_nodes {
                        let v = decoder.greedy_vehicle(&routes, node, vehicles);
                        let vi = v as usize;
                        let prefix_len = decoder.prefixes.get(vi).map_or(0, Vec::len);
                        let (pos, _) = cheapest_position(
                            inst,
                            decoder.start_of(vi),
                            &routes[vi][prefix_len..],
                            node,
                        );
                        routes[vi].insert(prefix_len + pos, node);
                        genome[j] = v;
                        velocity[j] = 0;
                    }
                }
                p.position = genome.clone();
                p.best_position = genome;
                p.velocity = velocity;
                p.value = f64::INFINITY;
                p.best_value = f64::INFINITY;
            }
        }
        state.free_ids = new_ids;
        state.vehicles = vehicles;
    }
    state.stale = true;
    state
}

impl Decoder<'_, '_> {
    /// Routes built from a subset of the free requests (`dims` index into
    /// the snapshot's free list), padded to `vehicles` entries.
    fn partial_routes(&self, dims: &[usize], genome: &[u32], vehicles: usize) -> Vec<Vec<Node>> {
        let inst = self.snapshot.instance;
        let n = vehicles.max(self.prefixes.len());
        let mut suffixes: Vec<Vec<Node>> = vec![Vec::new(); n];
        for (&d, &v) in dims.iter().zip(genome) {
            let v = v as usize;
            let node = self.free[d];
            let (pos, _) = cheapest_position(inst, self.start_of(v), &suffixes[v], node);
            suffixes[v].insert(pos, node);
        }
        suffixes
            .into_iter()
            .enumerate()
            .map(|(v, mut suffix)| {
                two_opt_path(inst, self.start_of(v), &mut suffix);
                let mut route = self.prefixes.get(v).cloned().unwrap_or_default();
                route.extend(suffix);
                route
            })
            .collect()
    }
}

/// [`DvrpSolver`] driving the discrete swarms across a day.
#[derive(Clone, Debug)]
pub struct MemsoSolver {
    config: MemsoConfig,
    seed: u64,
    state: Option<MemsoState>,
}

impl MemsoSolver {
    pub fn new(config: MemsoConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(MemsoSolver {
            config,
            seed,
            state: None,
        })
    }

    pub fn state(&self) -> Option<&MemsoState> {
        self.state.as_ref()
    }
}

impl DvrpSolver for MemsoSolver {
    fn name(&self) -> &'static str {
        "memso"
    }

    fn optimize(&mut self, snapshot: &FrozenSnapshot<'_>, budget: u64) -> Result<Solution> {
        let state = match self.state.take() {
            None => MemsoState::initial(snapshot, &self.config, self.seed)?,
            Some(s) => memso_transfer(s, snapshot, &self.config),
        };
        let (solution, state) = memso_optimize(state, snapshot, budget, &self.config)?;
        self.state = Some(state);
        Ok(solution)
    }
}
