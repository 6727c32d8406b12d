//! Two-phase continuous swarm solver.
//!
//! Phase 1 searches over cluster centers: every vehicle owns `k` planar
//! centers and requests go to the vehicle of their nearest center, subject
//! to capacity. Phase 2 orders each vehicle's requests by searching over
//! real-valued ranks. Between slices the best centers and ranks carry over.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{path_length, Node, Point, RequestId, Solution};
use crate::dynamics::{DvrpSolver, FrozenSnapshot};
use crate::error::{DvrpError, Result};
use crate::local_search::two_opt_path;
use crate::memso::default_penalty_weight;
use crate::pso::{ContinuousSwarm, SwarmConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoMpsoConfig {
    /// Cluster centers per vehicle.
    pub k: usize,
    /// Share of the budget spent on phase 1.
    pub phi: f64,
    /// Spare vehicles on top of the initial capacity bound.
    pub m_hat_slack: usize,
    pub penalty_weight: Option<f64>,
    pub phase1: SwarmConfig,
    pub phase2: SwarmConfig,
}

impl Default for TwoMpsoConfig {
    fn default() -> Self {
        TwoMpsoConfig {
            k: 2,
            phi: 0.7,
            m_hat_slack: 1,
            penalty_weight: None,
            phase1: SwarmConfig::default(),
            phase2: SwarmConfig::default().with_particles(10),
        }
    }
}

impl TwoMpsoConfig {
    pub fn validate(&self) -> Result<()> {
        self.phase1.validate()?;
        self.phase2.validate()?;
        if self.k == 0 {
            return Err(DvrpError::Config("k must be at least 1".into()));
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(DvrpError::Config("phi must lie in (0, 1)".into()));
        }
        if let Some(w) = self.penalty_weight {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(DvrpError::Config("penalty_weight must be >= 0".into()));
            }
        }
        Ok(())
    }

    fn phase1_budget(&self, budget: u64) -> u64 {
        (self.phi * budget as f64).floor() as u64
    }

    /// Smallest budget that pays for one sweep of each phase.
    pub fn min_budget(&self) -> u64 {
        let mut b = (self.phase1.particle_count + self.phase2.particle_count) as u64;
        while self.phase1_budget(b) < self.phase1.particle_count as u64
            || b - self.phase1_budget(b) < self.phase2.particle_count as u64
        {
            b += 1;
        }
        b
    }
}

/// Flattened centers `(x1, y1, x2, y2, …)`; vehicle `i` owns centers
/// `i·k .. (i+1)·k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterGenome(pub Vec<f64>);

impl CenterGenome {
    pub fn center(&self, c: usize) -> Point {
        Point::new(self.0[2 * c], self.0[2 * c + 1])
    }

    pub fn center_count(&self) -> usize {
        self.0.len() / 2
    }
}

/// One rank per request of a vehicle; lower ranks are visited first.
#[derive(Clone, Debug, PartialEq)]
pub struct RankGenome(pub Vec<f64>);

/// Outcome of the clustering step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Division {
    /// Vehicle per free request, in snapshot order.
    pub vehicle_of: Vec<usize>,
    /// Requests that no vehicle could take within capacity.
    pub flagged: Vec<bool>,
    /// Requests placed at their nearest center's vehicle.
    pub direct: usize,
    /// Requests moved to another vehicle for capacity.
    pub spilled: usize,
}

impl Division {
    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }
}

fn nearest_center(
    genome: &CenterGenome,
    p: Point,
    allowed: impl Fn(usize) -> bool,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for c in 0..genome.center_count() {
        if !allowed(c) {
            continue;
        }
        let d = p.distance(&genome.center(c));
        if best.is_none_or(|b| d < b.1) {
            best = Some((c, d));
        }
    }
    best
}

/// Assigns free requests to vehicles by nearest center.
///
/// Requests are handled in increasing distance to their nearest center.
/// Each goes to that center's vehicle when the residual capacity allows,
/// otherwise to the nearest center of a vehicle that still fits it, and
/// failing that to its nearest center anyway (flagged). Ties go to the
/// lower center index, then the earlier request.
pub fn decode_division(genome: &CenterGenome, k: usize, snapshot: &FrozenSnapshot<'_>) -> Division {
    let inst = snapshot.instance;
    let vehicles = genome.center_count() / k;
    let mut residual: Vec<f64> = (0..vehicles)
        .map(|v| {
            snapshot
                .commitment
                .vehicles
                .get(v)
                .map_or(inst.fleet().capacity, |c| c.remaining_capacity)
        })
        .collect();
    let n = snapshot.free_requests.len();
    let nearest: Vec<(usize, f64)> = snapshot
        .free_requests
        .iter()
        .map(|r| nearest_center(genome, r.location, |_| true).unwrap_or((0, 0.0)))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nearest[a].1.total_cmp(&nearest[b].1).then(a.cmp(&b)));

    let mut division = Division {
        vehicle_of: vec![0; n],
        flagged: vec![false; n],
        direct: 0,
        spilled: 0,
    };
    for j in order {
        let r = &snapshot.free_requests[j];
        let home = nearest[j].0 / k;
        let fits =
            |v: usize, residual: &[f64]| r.volume <= residual[v] + crate::domain::FEASIBILITY_EPS;
        let v = if fits(home, &residual) {
            division.direct += 1;
            home
        } else if let Some((c, _)) = nearest_center(genome, r.location, |c| fits(c / k, &residual))
        {
            division.spilled += 1;
            c / k
        } else {
            division.flagged[j] = true;
            home
        };
        residual[v] -= r.volume;
        division.vehicle_of[j] = v;
    }
    division
}

/// Per-vehicle routing context shared by both phases.
pub(crate) struct RouteFrame<'s, 'a> {
    snapshot: &'s FrozenSnapshot<'a>,
    free: Vec<Node>,
    prefixes: Vec<Vec<Node>>,
    penalty_weight: f64,
}

impl<'s, 'a> RouteFrame<'s, 'a> {
    pub(crate) fn new(snapshot: &'s FrozenSnapshot<'a>, penalty_weight: f64) -> Self {
        RouteFrame {
            free: snapshot.free_nodes(),
            prefixes: snapshot.commitment.prefix_nodes(snapshot.instance),
            snapshot,
            penalty_weight,
        }
    }

    fn prefix(&self, v: usize) -> &[Node] {
        self.prefixes.get(v).map_or(&[], Vec::as_slice)
    }

    fn start_of(&self, v: usize) -> Node {
        self.prefix(v).last().copied().unwrap_or(0)
    }

    fn full_route(&self, v: usize, suffix: &[Node]) -> Vec<Node> {
        let mut route = self.prefix(v).to_vec();
        route.extend_from_slice(suffix);
        route
    }

    /// Length of a full route plus weighted overrun.
    fn route_cost(&self, v: usize, route: &[Node]) -> f64 {
        if route.is_empty() {
            return 0.0;
        }
        path_length(self.snapshot.instance, 0, route)
            + self.penalty_weight * self.snapshot.route_violation(v, route)
    }

    /// Free-request groups per vehicle, in snapshot order, padded so every
    /// committed vehicle appears.
    fn groups(&self, division: &Division) -> Vec<Vec<Node>> {
        let vehicles = division
            .vehicle_of
            .iter()
            .map(|v| v + 1)
            .max()
            .unwrap_or(0)
            .max(self.prefixes.len());
        let mut groups = vec![Vec::new(); vehicles];
        for (&node, &v) in self.free.iter().zip(&division.vehicle_of) {
            groups[v].push(node);
        }
        groups
    }

    /// Committed-only cost for vehicles that received no free requests.
    fn idle_cost(&self, groups: &[Vec<Node>]) -> f64 {
        (0..self.prefixes.len())
            .filter(|&v| groups.get(v).is_none_or(Vec::is_empty))
            .map(|v| self.route_cost(v, self.prefix(v)))
            .sum()
    }
}

/// 64-bit FNV-1a over the genome bits and the slice seed.
fn genome_seed(genome: &[f64], seed: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for word in genome
        .iter()
        .map(|x| x.to_bits())
        .chain(std::iter::once(seed))
    {
        for byte in word.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Routes produced by phase 1 for `genome`: division, then per vehicle a
/// random order (seeded from the genome and `seed`) polished by 2-OPT.
fn phase1_routes(
    frame: &RouteFrame<'_, '_>,
    genome: &CenterGenome,
    k: usize,
    seed: u64,
) -> Vec<Vec<Node>> {
    let division = decode_division(genome, k, frame.snapshot);
    let mut groups = frame.groups(&division);
    let mut rng = ChaCha8Rng::seed_from_u64(genome_seed(&genome.0, seed));
    for (v, g) in groups.iter_mut().enumerate() {
        g.shuffle(&mut rng);
        two_opt_path(frame.snapshot.instance, frame.start_of(v), g);
    }
    groups
}

fn phase1_cost(frame: &RouteFrame<'_, '_>, genome: &CenterGenome, k: usize, seed: u64) -> f64 {
    let groups = phase1_routes(frame, genome, k, seed);
    let served: f64 = groups
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(v, g)| frame.route_cost(v, &frame.full_route(v, g)))
        .sum();
    served + frame.idle_cost(&groups)
}

/// Phase-1 fitness: total length plus weighted overrun of the routes built
/// from `genome`. Pure in `(genome, seed)`.
pub fn phase1_fitness(
    genome: &CenterGenome,
    k: usize,
    snapshot: &FrozenSnapshot<'_>,
    seed: u64,
    penalty_weight: f64,
) -> f64 {
    phase1_cost(&RouteFrame::new(snapshot, penalty_weight), genome, k, seed)
}

/// The requests of one vehicle, visited after its committed prefix.
#[derive(Clone, Debug)]
pub struct VehicleContext<'s, 'a> {
    pub vehicle: usize,
    /// Free requests on this vehicle, in increasing id order.
    pub requests: Vec<RequestId>,
    pub snapshot: &'s FrozenSnapshot<'a>,
    pub penalty_weight: f64,
}

/// Visit order: ascending rank, ties by request id.
pub fn rank_order(ranks: &[f64], requests: &[RequestId]) -> Vec<RequestId> {
    let mut idx: Vec<usize> = (0..requests.len()).collect();
    idx.sort_by(|&a, &b| {
        ranks[a]
            .total_cmp(&ranks[b])
            .then(requests[a].cmp(&requests[b]))
    });
    idx.into_iter().map(|i| requests[i]).collect()
}

/// Phase-2 fitness: length of the vehicle's route from the end of its
/// committed prefix through the ranked requests back to the depot, plus
/// the weighted overrun of the whole route (zero when it fits the day).
pub fn phase2_fitness(genome: &RankGenome, ctx: &VehicleContext<'_, '_>) -> f64 {
    let frame = RouteFrame::new(ctx.snapshot, ctx.penalty_weight);
    phase2_cost(
        &frame,
        ctx.vehicle,
        &ranked_nodes(ctx.snapshot, &genome.0, &ctx.requests),
    )
}

fn ranked_nodes(snapshot: &FrozenSnapshot<'_>, ranks: &[f64], requests: &[RequestId]) -> Vec<Node> {
    rank_order(ranks, requests)
        .into_iter()
        .map(|id| snapshot.instance.node_of(id).expect("known id"))
        .collect()
}

fn phase2_cost(frame: &RouteFrame<'_, '_>, v: usize, suffix: &[Node]) -> f64 {
    let inst = frame.snapshot.instance;
    let open = path_length(inst, frame.start_of(v), suffix);
    let route = frame.full_route(v, suffix);
    if route.is_empty() {
        return 0.0;
    }
    open + frame.penalty_weight * frame.snapshot.route_violation(v, &route)
}

/// Population summary carried between slices.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoMpsoState {
    pub centers: CenterGenome,
    pub ranks: BTreeMap<RequestId, f64>,
    pub k: usize,
    pub m_hat: usize,
    rng: ChaCha8Rng,
}

/// Bounding box of the depot and every request seen so far.
fn known_box(snapshot: &FrozenSnapshot<'_>) -> (Point, Point) {
    let inst = snapshot.instance;
    let mut lo = inst.depot();
    let mut hi = lo;
    let committed = snapshot.commitment.committed_ids();
    let points = snapshot.free_requests.iter().map(|r| r.location).chain(
        inst.requests()
            .iter()
            .filter(|r| committed.contains(&r.id))
            .map(|r| r.location),
    );
    for p in points {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

fn random_center(rng: &mut ChaCha8Rng, (lo, hi): (Point, Point)) -> [f64; 2] {
    [
        lo.x + rng.random::<f64>() * (hi.x - lo.x),
        lo.y + rng.random::<f64>() * (hi.y - lo.y),
    ]
}

/// Vehicles the current snapshot seems to need.
fn required_vehicles(snapshot: &FrozenSnapshot<'_>) -> usize {
    let c = snapshot.instance.fleet().capacity;
    let free = (snapshot.free_volume() / c - 1e-9).ceil().max(0.0) as usize;
    free + snapshot.commitment.busy_vehicles()
}

impl TwoMpsoState {
    pub fn initial(
        snapshot: &FrozenSnapshot<'_>,
        config: &TwoMpsoConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let inst = snapshot.instance;
        let volume: f64 = snapshot.free_volume();
        let fleet = inst.fleet().vehicle_count.max(1);
        let m_hat = (((volume / inst.fleet().capacity) - 1e-9).ceil().max(0.0) as usize
            + config.m_hat_slack)
            .max(snapshot.commitment.used_vehicle_span())
            .clamp(1, fleet);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bbox = known_box(snapshot);
        let centers = (0..m_hat * config.k)
            .flat_map(|_| random_center(&mut rng, bbox))
            .collect();
        let ranks = snapshot
            .free_requests
            .iter()
            .map(|r| (r.id, rng.random::<f64>()))
            .collect();
        Ok(TwoMpsoState {
            centers: CenterGenome(centers),
            ranks,
            k: config.k,
            m_hat,
            rng,
        })
    }
}

/// Adapts the state to the next snapshot: drops committed ranks, gives new
/// requests random ranks, and adds one vehicle's worth of random centers
/// when the known volume calls for more vehicles than `m_hat`.
pub fn two_mpso_transfer(mut state: TwoMpsoState, snapshot: &FrozenSnapshot<'_>) -> TwoMpsoState {
    let fleet = snapshot.instance.fleet().vehicle_count.max(1);
    let bbox = known_box(snapshot);
    let must_cover = snapshot.commitment.used_vehicle_span();
    while state.m_hat < must_cover.min(fleet) {
        state.m_hat += 1;
        for _ in 0..state.k {
            state.centers.0.extend(random_center(&mut state.rng, bbox));
        }
    }
    if required_vehicles(snapshot) > state.m_hat && state.m_hat < fleet {
        state.m_hat += 1;
        for _ in 0..state.k {
            state.centers.0.extend(random_center(&mut state.rng, bbox));
        }
    }
    let committed = snapshot.commitment.committed_ids();
    state.ranks.retain(|id, _| !committed.contains(id));
    for r in &snapshot.free_requests {
        if !state.ranks.contains_key(&r.id) {
            let u = state.rng.random::<f64>();
            state.ranks.insert(r.id, u);
        }
    }
    state
}

/// Runs both phases on `snapshot` within `budget` fitness evaluations.
pub fn two_mpso_optimize(
    mut state: TwoMpsoState,
    snapshot: &FrozenSnapshot<'_>,
    budget: u64,
    config: &TwoMpsoConfig,
) -> Result<(Solution, TwoMpsoState)> {
    config.validate()?;
    if budget < config.min_budget() {
        return Err(DvrpError::Config(format!(
            "budget {budget} below one sweep of each phase ({})",
            config.min_budget()
        )));
    }
    let inst = snapshot.instance;
    let penalty = config
        .penalty_weight
        .unwrap_or_else(|| default_penalty_weight(inst));
    let frame = RouteFrame::new(snapshot, penalty);
    let k = state.k;

    // Phase 1: division.
    let slice_seed: u64 = state.rng.random();
    let (lo, hi) = known_box(snapshot);
    let dim = state.centers.0.len();
    let lower: Vec<f64> = (0..dim)
        .map(|d| if d % 2 == 0 { lo.x } else { lo.y })
        .collect();
    let upper: Vec<f64> = (0..dim)
        .map(|d| if d % 2 == 0 { hi.x } else { hi.y })
        .collect();
    let p1_budget = config.phase1_budget(budget);
    let mut fit1 = |x: &[f64]| phase1_cost(&frame, &CenterGenome(x.to_vec()), k, slice_seed);
    let mut swarm = ContinuousSwarm::uniform(
        config.phase1.clone().with_seed(state.rng.random()),
        &lower,
        &upper,
        std::slice::from_ref(&state.centers.0),
        &mut fit1,
    )?;
    swarm.run(p1_budget, &mut fit1);
    let best_centers = CenterGenome(swarm.best().0.to_vec());
    let groups = phase1_routes(&frame, &best_centers, k, slice_seed);

    // Phase 2: ordering per vehicle, seeded with the phase-1 order and the
    // carried ranks.
    let busy: Vec<usize> = (0..groups.len())
        .filter(|&v| groups[v].len() >= 2)
        .collect();
    let p2_total = budget - swarm.evaluations().min(budget);
    let share = if busy.is_empty() {
        0
    } else {
        p2_total / busy.len() as u64
    };
    let mut suffixes = groups.clone();
    for &v in &busy {
        let mut requests: Vec<RequestId> = groups[v].iter().map(|&n| inst.node_id(n)).collect();
        requests.sort();
        let from_phase1: Vec<f64> = requests
            .iter()
            .map(|id| {
                let pos = groups[v]
                    .iter()
                    .position(|&n| inst.node_id(n) == *id)
                    .expect("member");
                (pos as f64 + 0.5) / requests.len() as f64
            })
            .collect();
        let carried: Vec<f64> = requests
            .iter()
            .map(|id| state.ranks.get(id).copied().unwrap_or(0.5))
            .collect();
        let mut fit2 = |x: &[f64]| phase2_cost(&frame, v, &ranked_nodes(snapshot, x, &requests));
        let cfg = config.phase2.clone().with_seed(state.rng.random());
        if share < cfg.particle_count as u64 {
            continue;
        }
        let lower = vec![0.0; requests.len()];
        let upper = vec![1.0; requests.len()];
        let mut swarm2 =
            ContinuousSwarm::uniform(cfg, &lower, &upper, &[from_phase1, carried], &mut fit2)?;
        swarm2.run(share, &mut fit2);
        let (best, _) = swarm2.best();
        for (id, &r) in requests.iter().zip(best) {
            state.ranks.insert(*id, r);
        }
        suffixes[v] = ranked_nodes(snapshot, best, &requests);
    }

    let mut routes: Vec<Vec<Node>> = suffixes
        .iter()
        .enumerate()
        .map(|(v, s)| frame.full_route(v, s))
        .collect();
    let span = routes
        .iter()
        .rposition(|r| !r.is_empty())
        .map_or(0, |i| i + 1);
    routes.truncate(span);
    state.centers = best_centers;
    Ok((Solution::from_nodes(&routes, inst), state))
}

/// [`DvrpSolver`] running both phases every slice.
#[derive(Clone, Debug)]
pub struct TwoMpsoSolver {
    config: TwoMpsoConfig,
    seed: u64,
    state: Option<TwoMpsoState>,
}

impl TwoMpsoSolver {
    pub fn new(config: TwoMpsoConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(TwoMpsoSolver {
            config,
            seed,
            state: None,
        })
    }

    pub fn state(&self) -> Option<&TwoMpsoState> {
        self.state.as_ref()
    }
}

impl DvrpSolver for TwoMpsoSolver {
    fn name(&self) -> &'static str {
        "2mpso"
    }

    fn optimize(&mut self, snapshot: &FrozenSnapshot<'_>, budget: u64) -> Result<Solution> {
        let state = match self.state.take() {
            None => TwoMpsoState::initial(snapshot, &self.config, self.seed)?,
            Some(s) => two_mpso_transfer(s, snapshot),
        };
        let (solution, state) = two_mpso_optimize(state, snapshot, budget, &self.config)?;
        self.state = Some(state);
        Ok(solution)
    }
}
