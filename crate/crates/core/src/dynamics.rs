//! Time-slice simulation of a working day.
//!
//! The day `[0, workday_end]` is cut into `n_ts` equal slices. At each
//! boundary the visible instance is frozen into a [`FrozenSnapshot`], a
//! solver produces a plan, and vehicles are moved along that plan up to the
//! next boundary. A request is committed to its vehicle as soon as its
//! service would start before the next boundary; committed requests can
//! never be moved again. Vehicles wait at their last committed stop between
//! slices.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::domain::{
    capacity_ok, check_feasibility, suffix_finish, time_ok, Node, ProblemInstance, Request,
    RequestId, Solution,
};
use crate::error::{DvrpError, Result};
use crate::local_search::{apply_insertion, best_insertion};

pub const DEFAULT_SLICES: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceClock {
    pub slice_count: usize,
    pub workday_end: f64,
    pub current_slice: usize,
}

impl SliceClock {
    pub fn new(slice_count: usize, workday_end: f64) -> Result<Self> {
        if slice_count == 0 {
            return Err(DvrpError::Config("slice count must be at least 1".into()));
        }
        Ok(SliceClock {
            slice_count,
            workday_end,
            current_slice: 0,
        })
    }

    /// Time of boundary `j`, `j · workday_end / n_ts`.
    pub fn boundary(&self, j: usize) -> f64 {
        if j >= self.slice_count {
            self.workday_end
        } else {
            j as f64 * self.workday_end / self.slice_count as f64
        }
    }

    pub fn now(&self) -> f64 {
        self.boundary(self.current_slice)
    }

    pub fn is_finished(&self) -> bool {
        self.current_slice >= self.slice_count
    }
}

/// Irrevocable part of one vehicle's route.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleCommitment {
    pub prefix: Vec<RequestId>,
    /// Location node of the last committed stop (0 = depot).
    pub at: Node,
    /// Time the vehicle finishes its last committed service.
    pub ready_time: f64,
    pub remaining_capacity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommitmentState {
    pub vehicles: Vec<VehicleCommitment>,
}

impl CommitmentState {
    /// Every vehicle idle at the depot with an empty load.
    pub fn initial(instance: &ProblemInstance) -> Self {
        let fleet = instance.fleet();
        CommitmentState {
            vehicles: vec![
                VehicleCommitment {
                    prefix: Vec::new(),
                    at: 0,
                    ready_time: 0.0,
                    remaining_capacity: fleet.capacity,
                };
                fleet.vehicle_count
            ],
        }
    }

    pub fn committed_ids(&self) -> HashSet<RequestId> {
        self.vehicles
            .iter()
            .flat_map(|v| v.prefix.iter().copied())
            .collect()
    }

    pub fn committed_count(&self) -> usize {
        self.vehicles.iter().map(|v| v.prefix.len()).sum()
    }

    /// Number of vehicles that already carry at least one committed request.
    pub fn busy_vehicles(&self) -> usize {
        self.vehicles
            .iter()
            .filter(|v| !v.prefix.is_empty())
            .count()
    }

    /// One past the highest vehicle index with a committed request.
    pub fn used_vehicle_span(&self) -> usize {
        self.vehicles
            .iter()
            .rposition(|v| !v.prefix.is_empty())
            .map_or(0, |i| i + 1)
    }

    /// Committed prefixes as a solution.
    pub fn to_solution(&self, instance: &ProblemInstance) -> Result<Solution> {
        let span = self.used_vehicle_span();
        Solution::new(
            self.vehicles[..span]
                .iter()
                .map(|v| v.prefix.clone())
                .collect(),
            instance,
        )
    }

    pub(crate) fn prefix_nodes(&self, instance: &ProblemInstance) -> Vec<Vec<Node>> {
        self.vehicles
            .iter()
            .map(|v| {
                v.prefix
                    .iter()
                    .map(|&id| instance.node_of(id).expect("committed ids are known"))
                    .collect()
            })
            .collect()
    }
}

/// The static VRP visible during one slice.
#[derive(Clone, Debug)]
pub struct FrozenSnapshot<'a> {
    pub time: f64,
    pub slice: usize,
    /// Arrived, uncommitted requests ordered by arrival time then id.
    pub free_requests: Vec<Request>,
    pub commitment: CommitmentState,
    pub instance: &'a ProblemInstance,
}

impl<'a> FrozenSnapshot<'a> {
    pub fn new(
        instance: &'a ProblemInstance,
        time: f64,
        slice: usize,
        commitment: CommitmentState,
    ) -> Self {
        let committed = commitment.committed_ids();
        let mut free_requests: Vec<Request> = instance
            .requests()
            .iter()
            .filter(|r| r.arrival_time <= time && !committed.contains(&r.id))
            .cloned()
            .collect();
        free_requests.sort_by(|a, b| {
            a.arrival_time
                .total_cmp(&b.arrival_time)
                .then(a.id.cmp(&b.id))
        });
        FrozenSnapshot {
            time,
            slice,
            free_requests,
            commitment,
            instance,
        }
    }

    /// Snapshot at the start of the day.
    pub fn initial(instance: &'a ProblemInstance) -> Self {
        FrozenSnapshot::new(instance, 0.0, 0, CommitmentState::initial(instance))
    }

    pub fn free_nodes(&self) -> Vec<Node> {
        self.free_requests
            .iter()
            .map(|r| self.instance.node_of(r.id).expect("snapshot ids are known"))
            .collect()
    }

    pub fn free_volume(&self) -> f64 {
        self.free_requests.iter().map(|r| r.volume).sum()
    }

    /// Length of the committed prefixes alone (each closed at the depot).
    pub fn committed_length(&self) -> f64 {
        self.commitment
            .prefix_nodes(self.instance)
            .iter()
            .filter(|r| !r.is_empty())
            .map(|r| crate::domain::path_length(self.instance, 0, r))
            .sum()
    }

    /// Capacity and working-day overrun of a full vehicle route whose first
    /// `prefix_len` stops are committed. Zero for a feasible route.
    pub(crate) fn route_violation(&self, vehicle: usize, route: &[Node]) -> f64 {
        let inst = self.instance;
        let load: f64 = route.iter().map(|&n| inst.node_volume(n)).sum();
        let cap_excess = (load - inst.fleet().capacity).max(0.0);
        let (start, ready, prefix_len) = match self.commitment.vehicles.get(vehicle) {
            Some(c) if !c.prefix.is_empty() => (c.at, c.ready_time, c.prefix.len()),
            _ => (0, 0.0, 0),
        };
        let finish = suffix_finish(inst, start, ready, self.time, &route[prefix_len..]);
        let time_excess = (finish - inst.workday_end()).max(0.0);
        let mut v = 0.0;
        if !capacity_ok(inst, load) {
            v += cap_excess;
        }
        if !time_ok(inst, finish) {
            v += time_excess;
        }
        v
    }
}

/// Something that can turn a frozen snapshot into a complete plan.
///
/// A plan lists one route per vehicle (trailing idle vehicles may be
/// omitted); each route must begin with that vehicle's committed prefix.
/// Solvers keep their own state between calls and are expected to
/// transfer it when the next snapshot arrives.
pub trait DvrpSolver {
    fn name(&self) -> &'static str;

    fn optimize(&mut self, snapshot: &FrozenSnapshot<'_>, budget: u64) -> Result<Solution>;
}

/// Moves vehicles along `plan` until the next slice boundary.
///
/// On the last slice every planned request is committed.
pub fn advance<'a>(
    clock: &mut SliceClock,
    plan: &Solution,
    state: &CommitmentState,
    instance: &'a ProblemInstance,
) -> Result<(CommitmentState, FrozenSnapshot<'a>)> {
    if clock.is_finished() {
        return Err(DvrpError::Config("the working day is already over".into()));
    }
    let now = clock.now();
    let report = check_feasibility(plan, instance, now, state);
    if !report.is_feasible() {
        return Err(DvrpError::InfeasiblePlan(report));
    }
    let next = clock.boundary(clock.current_slice + 1);
    let last = clock.current_slice + 1 == clock.slice_count;
    let new_state = commit_along(plan, state, instance, now, (!last).then_some(next))?;

    clock.current_slice += 1;
    let snapshot = FrozenSnapshot::new(
        instance,
        clock.now(),
        clock.current_slice,
        new_state.clone(),
    );
    Ok((new_state, snapshot))
}

/// Commits every planned stop the vehicle sets off for before `horizon`
/// (all of them when `horizon` is `None`). A vehicle on its way is never
/// diverted, so a stop whose service starts before `horizon` commits, and
/// so does one whose leg has begun by then.
fn commit_along(
    plan: &Solution,
    state: &CommitmentState,
    instance: &ProblemInstance,
    now: f64,
    horizon: Option<f64>,
) -> Result<CommitmentState> {
    let mut new_state = state.clone();
    for (v, route) in plan.routes().iter().enumerate() {
        let c = &mut new_state.vehicles[v];
        let suffix = &route[c.prefix.len()..];
        if suffix.is_empty() {
            continue;
        }
        let mut t = c.ready_time.max(now);
        let mut prev = c.at;
        for &id in suffix {
            let node = instance.node_of(id)?;
            let start = t + instance.travel_time(prev, node);
            if horizon.is_some_and(|h| t >= h) {
                break;
            }
            let r = instance.node_request(node);
            c.prefix.push(id);
            c.at = node;
            c.ready_time = start + r.service_time;
            c.remaining_capacity -= r.volume;
            t = c.ready_time;
            prev = node;
        }
    }
    Ok(new_state)
}

/// Fixes an infeasible plan by pulling offending requests out of their
/// routes and reinserting them greedily. Fails when some request has no
/// feasible slot left.
pub fn repair(plan: &Solution, snapshot: &FrozenSnapshot<'_>) -> Result<Solution> {
    let inst = snapshot.instance;
    let state = &snapshot.commitment;
    let fleet = inst.fleet().vehicle_count;
    let now = snapshot.time;

    let mut routes = state.prefix_nodes(inst);
    let mut placed: HashSet<Node> = routes.iter().flatten().copied().collect();
    let mut removed: Vec<Node> = Vec::new();

    for (v, route) in plan.routes().iter().enumerate() {
        for &id in route {
            let Ok(node) = inst.node_of(id) else { continue };
            if inst.node_request(node).arrival_time > now || placed.contains(&node) {
                continue;
            }
            placed.insert(node);
            if v < fleet {
                routes[v].push(node);
            } else {
                removed.push(node);
            }
        }
    }

    for (v, route) in routes.iter_mut().enumerate() {
        let prefix_len = state.vehicles[v].prefix.len();
        while route.len() > prefix_len && snapshot.route_violation(v, route) > 0.0 {
            removed.push(route.pop().expect("non-empty suffix"));
        }
    }
    for r in &snapshot.free_requests {
        let node = inst.node_of(r.id)?;
        if !placed.contains(&node) {
            removed.push(node);
        }
    }
    removed.sort_by(|&a, &b| {
        let (ra, rb) = (inst.node_request(a), inst.node_request(b));
        ra.arrival_time
            .total_cmp(&rb.arrival_time)
            .then(ra.id.cmp(&rb.id))
    });

    for node in removed {
        let ins = best_insertion(inst, &routes, state, now, node);
        if !ins.feasible {
            let sol = Solution::from_nodes(&routes, inst);
            let mut report = check_feasibility(&sol, inst, now, state);
            report
                .violations
                .push(crate::domain::Violation::MissingRequest(inst.node_id(node)));
            return Err(DvrpError::InfeasiblePlan(report));
        }
        apply_insertion(&mut routes, &ins, node);
    }
    let span = routes
        .iter()
        .rposition(|r| !r.is_empty())
        .map_or(0, |i| i + 1);
    routes.truncate(span);
    Ok(Solution::from_nodes(&routes, inst))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub slice: usize,
    pub time: f64,
    pub best_cost: f64,
}

/// Outcome of one simulated day.
#[derive(Clone, Debug)]
pub struct DayOutcome {
    pub solution: Solution,
    pub trace: Vec<TraceRow>,
    /// Slices whose plan needed repair.
    pub repairs: usize,
}

impl DayOutcome {
    /// Cost trace as `slice,time,best_cost` CSV.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("slice,time,best_cost\n");
        for row in &self.trace {
            let _ = writeln!(out, "{},{:.6},{:.6}", row.slice, row.time, row.best_cost);
        }
        out
    }
}

/// Splits the day budget over slices; the remainder goes to the first slice.
pub fn slice_budgets(total: u64, slices: usize) -> Vec<u64> {
    let n = slices as u64;
    let mut out = vec![total / n; slices];
    if let Some(first) = out.first_mut() {
        *first += total % n;
    }
    out
}

/// Plays a whole working day with `solver`.
pub fn run_day(
    instance: &ProblemInstance,
    solver: &mut dyn DvrpSolver,
    budget: u64,
    slices: usize,
) -> Result<DayOutcome> {
    let mut clock = SliceClock::new(slices, instance.workday_end())?;
    let mut state = CommitmentState::initial(instance);
    let mut snapshot = FrozenSnapshot::initial(instance);
    let mut trace = Vec::with_capacity(slices);
    let mut repairs = 0;

    for slice_budget in slice_budgets(budget, slices) {
        let mut plan = solver.optimize(&snapshot, slice_budget)?;
        let report = check_feasibility(&plan, instance, snapshot.time, &state);
        if !report.is_feasible() {
            log::debug!(
                "{}: slice {} plan infeasible ({report}), repairing",
                solver.name(),
                snapshot.slice
            );
            plan = repair(&plan, &snapshot)?;
            repairs += 1;
        }
        trace.push(TraceRow {
            slice: snapshot.slice,
            time: snapshot.time,
            best_cost: plan.total_length(),
        });
        let (next_state, next_snapshot) = advance(&mut clock, &plan, &state, instance)?;
        state = next_state;
        snapshot = next_snapshot;
    }

    // Requests that arrived during the final slice.
    if !snapshot.free_requests.is_empty() {
        let plan = repair(&state.to_solution(instance)?, &snapshot)?;
        state = commit_along(&plan, &state, instance, snapshot.time, None)?;
        repairs += 1;
    }

    let solution = state.to_solution(instance)?;
    let report = check_feasibility(&solution, instance, instance.workday_end(), &state);
    if !report.is_feasible() {
        return Err(DvrpError::InfeasiblePlan(report));
    }
    Ok(DayOutcome {
        solution,
        trace,
        repairs,
    })
}
