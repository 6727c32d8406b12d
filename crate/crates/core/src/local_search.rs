//! 2-OPT route improvement and cheapest insertion.

use crate::domain::{
    capacity_ok, path_length, suffix_finish, time_ok, Node, ProblemInstance, RequestId, Solution,
};
use crate::dynamics::CommitmentState;
use crate::error::Result;

/// Moves must shorten a route by more than this to be applied.
const IMPROVEMENT_EPS: f64 = 1e-10;

/// A single depot-to-depot route with its cached length.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteView {
    ids: Vec<RequestId>,
    length: f64,
}

impl RouteView {
    pub fn new(ids: Vec<RequestId>, instance: &ProblemInstance) -> Result<Self> {
        let nodes = instance.nodes_of(&ids)?;
        Ok(RouteView {
            length: path_length(instance, 0, &nodes),
            ids,
        })
    }

    pub fn ids(&self) -> &[RequestId] {
        &self.ids
    }

    pub fn length(&self) -> f64 {
        self.length
    }
}

/// 2-OPT on a closed depot route.
///
/// Unknown ids cannot occur because a `RouteView` is validated on construction.
pub fn two_opt(route: &RouteView, instance: &ProblemInstance) -> RouteView {
    let mut nodes = instance
        .nodes_of(&route.ids)
        .expect("route view ids are validated");
    two_opt_path(instance, 0, &mut nodes);
    RouteView {
        length: path_length(instance, 0, &nodes),
        ids: nodes.iter().map(|&n| instance.node_id(n)).collect(),
    }
}

#[inline]
fn at(start: Node, nodes: &[Node], i: usize) -> Node {
    // Position 0 is the fixed start, positions 1..=len the stops, len + 1 the depot.
    if i == 0 {
        start
    } else if i <= nodes.len() {
        nodes[i - 1]
    } else {
        0
    }
}

/// First improving edge pair in row-major scan order, if any.
///
/// A pair `(i, j)` stands for the edges `(p_i, p_{i+1})` and `(p_j, p_{j+1})`
/// of the path `start, nodes..., depot`; applying it reverses `p_{i+1..=j}`.
pub(crate) fn first_improving_move(
    instance: &ProblemInstance,
    start: Node,
    nodes: &[Node],
) -> Option<(usize, usize)> {
    let k = nodes.len();
    if k < 2 {
        return None;
    }
    for i in 0..k {
        let a = at(start, nodes, i);
        let b = at(start, nodes, i + 1);
        let ab = instance.dist(a, b);
        for j in (i + 2)..=k {
            let c = at(start, nodes, j);
            let d = at(start, nodes, j + 1);
            let delta = instance.dist(a, c) + instance.dist(b, d) - ab - instance.dist(c, d);
            if delta < -IMPROVEMENT_EPS {
                return Some((i, j));
            }
        }
    }
    None
}

/// First-improvement 2-OPT over the open path `start → nodes → depot`;
/// `start` and the final depot stay fixed. Returns whether anything moved.
pub(crate) fn two_opt_path(instance: &ProblemInstance, start: Node, nodes: &mut [Node]) -> bool {
    let mut changed = false;
    while let Some((i, j)) = first_improving_move(instance, start, nodes) {
        nodes[i..j].reverse();
        changed = true;
    }
    changed
}

/// True when no edge pair of the closed route can be swapped for a gain.
pub fn is_two_opt_stable(route: &RouteView, instance: &ProblemInstance) -> bool {
    let nodes = instance
        .nodes_of(&route.ids)
        .expect("route view ids are validated");
    first_improving_move(instance, 0, &nodes).is_none()
}

/// Chosen slot for one request.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Insertion {
    pub vehicle: usize,
    /// Index in the vehicle's full route (committed prefix included).
    pub position: usize,
    /// Increase in route length.
    pub delta: f64,
    pub feasible: bool,
}

#[inline]
fn detour(instance: &ProblemInstance, route: &[Node], start: Node, pos: usize, node: Node) -> f64 {
    let prev = if pos == 0 { start } else { route[pos - 1] };
    let next = if pos == route.len() { 0 } else { route[pos] };
    instance.dist(prev, node) + instance.dist(node, next) - instance.dist(prev, next)
}

/// Cheapest slot for `node` after each vehicle's committed prefix.
///
/// Feasible slots (capacity and working day) always win over infeasible
/// ones. Among vehicles with an empty route only the first is examined,
/// since idle vehicles at the depot are interchangeable. When nothing is
/// feasible the request goes to the cheapest slot of the least-loaded route.
pub(crate) fn best_insertion(
    instance: &ProblemInstance,
    routes: &[Vec<Node>],
    state: &CommitmentState,
    now: f64,
    node: Node,
) -> Insertion {
    let fleet = instance.fleet().vehicle_count;
    let volume = instance.node_volume(node);
    let mut best: Option<Insertion> = None;
    let mut empty_seen = false;
    let mut candidate = Vec::new();

    for v in 0..fleet.max(routes.len()) {
        let route: &[Node] = routes.get(v).map(Vec::as_slice).unwrap_or(&[]);
        let commitment = state.vehicles.get(v);
        let prefix_len = commitment.map_or(0, |c| c.prefix.len()).min(route.len());
        if route.is_empty() && prefix_len == 0 {
            if empty_seen {
                continue;
            }
            empty_seen = true;
        }
        let (start, ready) = match commitment {
            Some(c) if prefix_len > 0 => (c.at, c.ready_time),
            _ => (0, 0.0),
        };
        let load: f64 = route.iter().map(|&n| instance.node_volume(n)).sum();
        let fits = capacity_ok(instance, load + volume);
        let suffix = &route[prefix_len..];
        for pos in 0..=suffix.len() {
            let delta = detour(instance, suffix, start, pos, node);
            if best.is_some_and(|b| b.feasible && delta >= b.delta) {
                continue;
            }
            let feasible = fits && {
                candidate.clear();
                candidate.extend_from_slice(&suffix[..pos]);
                candidate.push(node);
                candidate.extend_from_slice(&suffix[pos..]);
                time_ok(
                    instance,
                    suffix_finish(instance, start, ready, now, &candidate),
                )
            };
            if feasible && best.is_none_or(|b| !b.feasible || delta < b.delta) {
                best = Some(Insertion {
                    vehicle: v,
                    position: prefix_len + pos,
                    delta,
                    feasible: true,
                });
            }
        }
    }
    if let Some(b) = best {
        return b;
    }

    // Nothing feasible: least-loaded route, cheapest slot there.
    let mut target = 0;
    let mut target_load = f64::INFINITY;
    for v in 0..fleet.max(routes.len()) {
        let route: &[Node] = routes.get(v).map(Vec::as_slice).unwrap_or(&[]);
        let load: f64 = route.iter().map(|&n| instance.node_volume(n)).sum();
        if load < target_load {
            target_load = load;
            target = v;
        }
    }
    let route: &[Node] = routes.get(target).map(Vec::as_slice).unwrap_or(&[]);
    let commitment = state.vehicles.get(target);
    let prefix_len = commitment.map_or(0, |c| c.prefix.len()).min(route.len());
    let start = match commitment {
        Some(c) if prefix_len > 0 => c.at,
        _ => 0,
    };
    let suffix = &route[prefix_len..];
    let mut pos_best = 0;
    let mut delta_best = f64::INFINITY;
    for pos in 0..=suffix.len() {
        let delta = detour(instance, suffix, start, pos, node);
        if delta < delta_best {
            delta_best = delta;
            pos_best = pos;
        }
    }
    Insertion {
        vehicle: target,
        position: prefix_len + pos_best,
        delta: delta_best,
        feasible: false,
    }
}

pub(crate) fn apply_insertion(routes: &mut Vec<Vec<Node>>, ins: &Insertion, node: Node) {
    if routes.len() <= ins.vehicle {
        routes.resize(ins.vehicle + 1, Vec::new());
    }
    routes[ins.vehicle].insert(ins.position, node);
}

/// Inserts `request` into `sol` at the cheapest position after the
/// committed prefixes, as seen at time `now`.
///
/// The returned flag is false when no position satisfies capacity and the
/// working day; the request is then parked on the least-loaded vehicle and
/// must be repaired later.
pub fn greedy_insert(
    request: RequestId,
    sol: &Solution,
    instance: &ProblemInstance,
    locked: &CommitmentState,
    now: f64,
) -> Result<(Solution, bool)> {
    let node = instance.node_of(request)?;
    let mut routes = sol.node_routes(instance)?;
    let ins = best_insertion(instance, &routes, locked, now, node);
    apply_insertion(&mut routes, &ins, node);
    Ok((Solution::from_nodes(&routes, instance), ins.feasible))
}

/// Cheapest position for `node` in a single route, ignoring feasibility.
/// Ties go to the earliest position.
pub(crate) fn cheapest_position(
    instance: &ProblemInstance,
    start: Node,
    suffix: &[Node],
    node: Node,
) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for pos in 0..=suffix.len() {
        let delta = detour(instance, suffix, start, pos, node);
        if delta < best.1 {
            best = (pos, delta);
        }
    }
    best
}
