//! Problem and solution types, distance arithmetic and feasibility checks.
//!
//! Locations are indexed as graph nodes: node `0` is the depot and node
//! `i + 1` is the `i`-th request of the instance. Distances are Euclidean
//! in raw benchmark units, travel time is `distance / speed`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::CommitmentState;
use crate::error::{DvrpError, Result};

/// Index into the instance's location table (0 = depot).
pub type Node = usize;

/// Relative slack applied to capacity and working-day comparisons.
pub(crate) const FEASIBILITY_EPS: f64 = 1e-9;

/// Above this many locations the distance matrix is not cached.
const MATRIX_LIMIT: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(pub u32);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// A customer request: where, how much cargo, how long to unload, and
/// when it becomes known (0 for requests available before the day starts).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub location: Point,
    pub volume: f64,
    pub service_time: f64,
    pub arrival_time: f64,
}

impl Request {
    pub fn is_a_priori(&self) -> bool {
        self.arrival_time <= 0.0
    }
}

/// Homogeneous fleet description.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FleetSpec {
    pub capacity: f64,
    pub speed: f64,
    pub vehicle_count: usize,
}

/// Declared coordinate bounds of an instance file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Mutable collection of instance fields, validated by [`InstanceBuilder::build`].
#[derive(Clone, Debug)]
pub struct InstanceBuilder {
    pub name: String,
    pub depot: Point,
    pub capacity: f64,
    pub speed: f64,
    /// Defaults to the number of requests (an effectively unbounded fleet).
    pub vehicle_count: Option<usize>,
    pub workday_end: f64,
    /// Defaults to half of the working day.
    pub cutoff_time: Option<f64>,
    pub bounds: Option<Bounds>,
    pub requests: Vec<Request>,
}

impl InstanceBuilder {
    pub fn new(name: impl Into<String>, depot: Point, capacity: f64, workday_end: f64) -> Self {
        InstanceBuilder {
            name: name.into(),
            depot,
            capacity,
            speed: 1.0,
            vehicle_count: None,
            workday_end,
            cutoff_time: None,
            bounds: None,
            requests: Vec::new(),
        }
    }

    pub fn vehicles(mut self, count: usize) -> Self {
        self.vehicle_count = Some(count);
        self
    }

    pub fn speed(mut self, speed: f64) -> Self {
        self.speed = speed;
        self
    }

    pub fn cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff_time = Some(cutoff);
        self
    }

    pub fn request(mut self, request: Request) -> Self {
        self.requests.push(request);
        self
    }

    pub fn requests(mut self, requests: impl IntoIterator<Item = Request>) -> Self {
        self.requests.extend(requests);
        self
    }

    pub fn build(self) -> Result<ProblemInstance> {
        ProblemInstance::from_builder(self)
    }
}

/// Immutable DVRP instance.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    name: String,
    depot: Point,
    fleet: FleetSpec,
    requests: Vec<Request>,
    workday_end: f64,
    cutoff_time: f64,
    bounds: Option<Bounds>,
    index: HashMap<RequestId, usize>,
    points: Vec<Point>,
    matrix: Option<Vec<f64>>,
}

impl PartialEq for ProblemInstance {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.depot == other.depot
            && self.fleet == other.fleet
            && self.requests == other.requests
            && self.workday_end == other.workday_end
            && self.cutoff_time == other.cutoff_time
            && self.bounds == other.bounds
    }
}

fn finite(value: f64, what: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(DvrpError::InvalidInstance(format!("{what} is not finite")))
    }
}

impl ProblemInstance {
    fn from_builder(b: InstanceBuilder) -> Result<Self> {
        let invalid = |msg: String| Err(DvrpError::InvalidInstance(msg));
        finite(b.capacity, "capacity")?;
        finite(b.speed, "speed")?;
        finite(b.workday_end, "workday")?;
        finite(b.depot.x, "depot x")?;
        finite(b.depot.y, "depot y")?;
        if b.capacity <= 0.0 {
            return invalid(format!("capacity must be positive, got {}", b.capacity));
        }
        if b.speed <= 0.0 {
            return invalid(format!("speed must be positive, got {}", b.speed));
        }
        if b.workday_end <= 0.0 {
            return invalid(format!("workday must be positive, got {}", b.workday_end));
        }
        let cutoff_time = b.cutoff_time.unwrap_or(b.workday_end / 2.0);
        finite(cutoff_time, "cutoff")?;
        if cutoff_time < 0.0 || cutoff_time > b.workday_end {
            return invalid(format!(
                "cutoff {cutoff_time} outside the working day [0, {}]",
                b.workday_end
            ));
        }
        let vehicle_count = b.vehicle_count.unwrap_or(b.requests.len().max(1));
        if vehicle_count == 0 {
            return invalid("vehicle count must be at least 1".into());
        }
        if let Some(bounds) = &b.bounds {
            if !bounds.contains(&b.depot) {
                return invalid("depot lies outside the declared bounds".into());
            }
        }

        let mut index = HashMap::with_capacity(b.requests.len());
        for (i, r) in b.requests.iter().enumerate() {
            if index.insert(r.id, i).is_some() {
                return invalid(format!("duplicate request id {}", r.id));
            }
            finite(r.location.x, "request x")?;
            finite(r.location.y, "request y")?;
            finite(r.volume, "request volume")?;
            finite(r.service_time, "service time")?;
            finite(r.arrival_time, "arrival time")?;
            if r.volume < 0.0 || r.volume > b.capacity {
                return invalid(format!(
                    "request {}: volume {} outside [0, {}]",
                    r.id, r.volume, b.capacity
                ));
            }
            if r.service_time < 0.0 {
                return invalid(format!("request {}: negative service time", r.id));
            }
            if r.arrival_time < 0.0 {
                return invalid(format!("request {}: negative arrival time", r.id));
            }
            if r.arrival_time > cutoff_time {
                return invalid(format!(
                    "request {}: arrival {} after cut-off {}",
                    r.id, r.arrival_time, cutoff_time
                ));
            }
            if let Some(bounds) = &b.bounds {
                if !bounds.contains(&r.location) {
                    return invalid(format!("request {} lies outside the declared bounds", r.id));
                }
            }
        }

        let mut points = Vec::with_capacity(b.requests.len() + 1);
        points.push(b.depot);
        points.extend(b.requests.iter().map(|r| r.location));
        let matrix = (points.len() <= MATRIX_LIMIT).then(|| {
            let n = points.len();
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = points[i].distance(&points[j]);
                    m[i * n + j] = d;
                    m[j * n + i] = d;
                }
            }
            m
        });

        Ok(ProblemInstance {
            name: b.name,
            depot: b.depot,
            fleet: FleetSpec {
                capacity: b.capacity,
                speed: b.speed,
                vehicle_count,
            },
            requests: b.requests,
            workday_end: b.workday_end,
            cutoff_time,
            bounds: b.bounds,
            index,
            points,
            matrix,
        })
    }

    /// Builder pre-filled with this instance's fields.
    pub fn to_builder(&self) -> InstanceBuilder {
        InstanceBuilder {
            name: self.name.clone(),
            depot: self.depot,
            capacity: self.fleet.capacity,
            speed: self.fleet.speed,
            vehicle_count: Some(self.fleet.vehicle_count),
            workday_end: self.workday_end,
            cutoff_time: Some(self.cutoff_time),
            bounds: self.bounds,
            requests: self.requests.clone(),
        }
    }

    /// Same instance with every request known at the start of the day.
    pub fn static_version(&self) -> ProblemInstance {
        let mut b = self.to_builder();
        for r in &mut b.requests {
            r.arrival_time = 0.0;
        }
        b.build()
            .expect("static version of a valid instance is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn depot(&self) -> Point {
        self.depot
    }

    pub fn fleet(&self) -> &FleetSpec {
        &self.fleet
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn workday_end(&self) -> f64 {
        self.workday_end
    }

    pub fn cutoff_time(&self) -> f64 {
        self.cutoff_time
    }

    pub fn bounds(&self) -> Option<Bounds> {
        self.bounds
    }

    pub fn request(&self, id: RequestId) -> Result<&Request> {
        self.index_of(id).map(|i| &self.requests[i])
    }

    pub fn index_of(&self, id: RequestId) -> Result<usize> {
        self.index
            .get(&id)
            .copied()
            .ok_or(DvrpError::UnknownRequest(id))
    }

    pub fn node_of(&self, id: RequestId) -> Result<Node> {
        self.index_of(id).map(|i| i + 1)
    }

    /// Request at `node`; panics on the depot node.
    pub(crate) fn node_request(&self, node: Node) -> &Request {
        &self.requests[node - 1]
    }

    pub(crate) fn node_id(&self, node: Node) -> RequestId {
        self.requests[node - 1].id
    }

    pub fn node_point(&self, node: Node) -> Point {
        self.points[node]
    }

    pub(crate) fn node_volume(&self, node: Node) -> f64 {
        if node == 0 {
            0.0
        } else {
            self.requests[node - 1].volume
        }
    }

    pub(crate) fn node_service(&self, node: Node) -> f64 {
        if node == 0 {
            0.0
        } else {
            self.requests[node - 1].service_time
        }
    }

    #[inline]
    pub fn dist(&self, a: Node, b: Node) -> f64 {
        match &self.matrix {
            Some(m) => m[a * self.points.len() + b],
            None => self.points[a].distance(&self.points[b]),
        }
    }

    pub fn travel_time(&self, a: Node, b: Node) -> f64 {
        self.dist(a, b) / self.fleet.speed
    }

    pub fn total_volume(&self) -> f64 {
        self.requests.iter().map(|r| r.volume).sum()
    }

    /// Axis-aligned box around the depot and every request.
    pub fn bounding_box(&self) -> Bounds {
        let mut min = self.depot;
        let mut max = self.depot;
        for p in &self.points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Bounds { min, max }
    }

    pub(crate) fn nodes_of(&self, route: &[RequestId]) -> Result<Vec<Node>> {
        route.iter().map(|&id| self.node_of(id)).collect()
    }
}

/// Length of a closed tour from `start` through `nodes` back to the depot.
pub(crate) fn path_length(instance: &ProblemInstance, start: Node, nodes: &[Node]) -> f64 {
    let mut prev = start;
    let mut total = 0.0;
    for &n in nodes {
        total += instance.dist(prev, n);
        prev = n;
    }
    total + instance.dist(prev, 0)
}

/// Euclidean length of depot → r1 → … → rk → depot.
pub fn route_length(route: &[RequestId], instance: &ProblemInstance) -> Result<f64> {
    let nodes = instance.nodes_of(route)?;
    Ok(path_length(instance, 0, &nodes))
}

/// Per-vehicle ordered request sequences with a cached total length.
///
/// The cached length is computed on construction; the routes cannot be
/// mutated in place, so the cache can never go stale.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    routes: Vec<Vec<RequestId>>,
    total_length: f64,
}

impl Solution {
    pub fn new(routes: Vec<Vec<RequestId>>, instance: &ProblemInstance) -> Result<Self> {
        let mut total_length = 0.0;
        for r in &routes {
            total_length += route_length(r, instance)?;
        }
        Ok(Solution {
            routes,
            total_length,
        })
    }

    pub(crate) fn from_nodes(node_routes: &[Vec<Node>], instance: &ProblemInstance) -> Self {
        let mut total_length = 0.0;
        let routes = node_routes
            .iter()
            .map(|r| {
                total_length += if r.is_empty() {
                    0.0
                } else {
                    path_length(instance, 0, r)
                };
                r.iter().map(|&n| instance.node_id(n)).collect()
            })
            .collect();
        Solution {
            routes,
            total_length,
        }
    }

    pub fn empty(vehicles: usize) -> Self {
        Solution {
            routes: vec![Vec::new(); vehicles],
            total_length: 0.0,
        }
    }

    pub fn routes(&self) -> &[Vec<RequestId>] {
        &self.routes
    }

    pub fn into_routes(self) -> Vec<Vec<RequestId>> {
        self.routes
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn request_count(&self) -> usize {
        self.routes.iter().map(Vec::len).sum()
    }

    pub(crate) fn node_routes(&self, instance: &ProblemInstance) -> Result<Vec<Vec<Node>>> {
        self.routes.iter().map(|r| instance.nodes_of(r)).collect()
    }
}

/// Sum of the route lengths of `sol`, recomputed from scratch.
pub fn solution_cost(sol: &Solution, instance: &ProblemInstance) -> Result<f64> {
    sol.routes()
        .iter()
        .try_fold(0.0, |acc, r| Ok(acc + route_length(r, instance)?))
}

/// Time a vehicle standing at `start` (free from `ready`) gets back to the
/// depot after serving `suffix`.
///
/// With a non-empty suffix the vehicle cannot leave before `now`; with an
/// empty suffix it drives home straight after its last service.
pub(crate) fn suffix_finish(
    instance: &ProblemInstance,
    start: Node,
    ready: f64,
    now: f64,
    suffix: &[Node],
) -> f64 {
    let mut t = if suffix.is_empty() {
        ready
    } else {
        ready.max(now)
    };
    let mut prev = start;
    for &n in suffix {
        t += instance.travel_time(prev, n) + instance.node_service(n);
        prev = n;
    }
    t + instance.travel_time(prev, 0)
}

pub(crate) fn capacity_ok(instance: &ProblemInstance, load: f64) -> bool {
    load <= instance.fleet().capacity * (1.0 + FEASIBILITY_EPS)
}

pub(crate) fn time_ok(instance: &ProblemInstance, finish: f64) -> bool {
    finish <= instance.workday_end() * (1.0 + FEASIBILITY_EPS)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    UnknownRequest(RequestId),
    DuplicateRequest(RequestId),
    /// A request known at the check time is served by no route.
    MissingRequest(RequestId),
    /// A route serves a request that has not arrived yet.
    NotYetArrived(RequestId),
    CapacityExceeded {
        vehicle: usize,
        load: f64,
        capacity: f64,
    },
    WorkdayOverrun {
        vehicle: usize,
        finish: f64,
        workday_end: f64,
    },
    CommittedPrefixModified {
        vehicle: usize,
    },
    TooManyRoutes {
        routes: usize,
        vehicles: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownRequest(id) => write!(f, "unknown request {id}"),
            Violation::DuplicateRequest(id) => write!(f, "request {id} served more than once"),
            Violation::MissingRequest(id) => write!(f, "request {id} not served"),
            Violation::NotYetArrived(id) => write!(f, "request {id} planned before its arrival"),
            Violation::CapacityExceeded {
                vehicle,
                load,
                capacity,
            } => write!(
                f,
                "vehicle {vehicle}: load {load} exceeds capacity {capacity}"
            ),
            Violation::WorkdayOverrun {
                vehicle,
                finish,
                workday_end,
            } => write!(
                f,
                "vehicle {vehicle}: returns at {finish} after {workday_end}"
            ),
            Violation::CommittedPrefixModified { vehicle } => {
                write!(f, "vehicle {vehicle}: committed prefix modified")
            }
            Violation::TooManyRoutes { routes, vehicles } => {
                write!(f, "{routes} routes for a fleet of {vehicles}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "feasible");
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Lists every structural, capacity, time and commitment violation of `sol`
/// as seen at time `now` with the given commitments.
pub fn check_feasibility(
    sol: &Solution,
    instance: &ProblemInstance,
    now: f64,
    committed: &CommitmentState,
) -> FeasibilityReport {
    let mut violations = Vec::new();
    let vehicles = instance.fleet().vehicle_count;
    if sol.routes().len() > vehicles {
        violations.push(Violation::TooManyRoutes {
            routes: sol.routes().len(),
            vehicles,
        });
    }

    let mut seen: HashSet<RequestId> = HashSet::new();
    for route in sol.routes() {
        for &id in route {
            match instance.request(id) {
                Err(_) => violations.push(Violation::UnknownRequest(id)),
                Ok(r) => {
                    if !seen.insert(id) {
                        violations.push(Violation::DuplicateRequest(id));
                    } else if r.arrival_time > now {
                        violations.push(Violation::NotYetArrived(id));
                    }
                }
            }
        }
    }
    for r in instance.requests() {
        if r.arrival_time <= now && !seen.contains(&r.id) {
            violations.push(Violation::MissingRequest(r.id));
        }
    }

    for (v, commitment) in committed.vehicles.iter().enumerate() {
        let route: &[RequestId] = sol.routes().get(v).map(Vec::as_slice).unwrap_or(&[]);
        if !route.starts_with(&commitment.prefix) {
            violations.push(Violation::CommittedPrefixModified { vehicle: v });
        }
    }

    for (v, route) in sol.routes().iter().enumerate() {
        let known: Vec<Node> = route
            .iter()
            .filter_map(|&id| instance.node_of(id).ok())
            .collect();
        let load: f64 = known.iter().map(|&n| instance.node_volume(n)).sum();
        if !capacity_ok(instance, load) {
            violations.push(Violation::CapacityExceeded {
                vehicle: v,
                load,
                capacity: instance.fleet().capacity,
            });
        }
        let (start, ready, suffix) = match committed.vehicles.get(v) {
            Some(c) if route.starts_with(&c.prefix) && !c.prefix.is_empty() => (
                c.at,
                c.ready_time,
                &known[c.prefix.len().min(known.len())..],
            ),
            _ => (0, 0.0, &known[..]),
        };
        let finish = suffix_finish(instance, start, ready, now, suffix);
        if !time_ok(instance, finish) {
            violations.push(Violation::WorkdayOverrun {
                vehicle: v,
                finish,
                workday_end: instance.workday_end(),
            });
        }
    }

    FeasibilityReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(id: u32, x: f64, y: f64, volume: f64) -> Request {
        Request {
            id: RequestId(id),
            location: Point::new(x, y),
            volume,
            service_time: 0.0,
            arrival_time: 0.0,
        }
    }

    fn ids(v: &[u32]) -> Vec<RequestId> {
        v.iter().map(|&i| RequestId(i)).collect()
    }

    #[test]
    fn right_triangle_route() {
        let inst = InstanceBuilder::new("t", Point::new(0.0, 0.0), 10.0, 100.0)
            .request(req(1, 0.0, 3.0, 1.0))
            .request(req(2, 4.0, 0.0, 1.0))
            .build()
            .unwrap();
        assert_eq!(route_length(&ids(&[1, 2]), &inst).unwrap(), 12.0);
        assert_eq!(route_length(&[], &inst).unwrap(), 0.0);
        assert!(matches!(
            route_length(&ids(&[7]), &inst),
            Err(DvrpError::UnknownRequest(RequestId(7)))
        ));
    }

    #[test]
    fn cost_is_additive() {
        // 12 from the triangle above, 8 from a there-and-back at distance 4.
        let inst = InstanceBuilder::new("t", Point::new(0.0, 0.0), 10.0, 100.0)
            .request(req(1, 0.0, 3.0, 1.0))
            .request(req(2, 4.0, 0.0, 1.0))
            .request(req(3, 0.0, -4.0, 1.0))
            .build()
            .unwrap();
        let sol = Solution::new(vec![ids(&[1, 2]), ids(&[3])], &inst).unwrap();
        assert_eq!(sol.total_length(), 20.0);
        assert_eq!(solution_cost(&sol, &inst).unwrap(), 20.0);
    }

    #[test]
    fn empty_instance_costs_nothing() {
        let inst = InstanceBuilder::new("e", Point::new(0.0, 0.0), 10.0, 100.0)
            .build()
            .unwrap();
        let sol = Solution::empty(1);
        assert_eq!(solution_cost(&sol, &inst).unwrap(), 0.0);
    }

    #[test]
    fn defaults() {
        let inst = InstanceBuilder::new("d", Point::new(0.0, 0.0), 160.0, 480.0)
            .request(req(1, 1.0, 1.0, 10.0))
            .build()
            .unwrap();
        assert_eq!(inst.cutoff_time(), 240.0);
        assert_eq!(inst.fleet().speed, 1.0);
        assert_eq!(inst.fleet().vehicle_count, 1);
    }

    #[test]
    fn rejects_bad_requests() {
        let base = || InstanceBuilder::new("b", Point::new(0.0, 0.0), 10.0, 100.0);
        assert!(base().request(req(1, 0.0, 0.0, 11.0)).build().is_err());
        assert!(base().request(req(1, 0.0, 0.0, -1.0)).build().is_err());
        assert!(base()
            .request(req(1, 0.0, 0.0, 1.0))
            .request(req(1, 1.0, 0.0, 1.0))
            .build()
            .is_err());
        let mut late = req(1, 0.0, 0.0, 1.0);
        late.arrival_time = 60.0;
        assert!(base().request(late).build().is_err());
    }

    #[test]
    fn capacity_and_duplicate_violations() {
        let inst = InstanceBuilder::new("v", Point::new(0.0, 0.0), 10.0, 100.0)
            .vehicles(2)
            .request(req(1, 1.0, 0.0, 6.0))
            .request(req(2, 2.0, 0.0, 6.0))
            .build()
            .unwrap();
        let state = CommitmentState::initial(&inst);
        let over = Solution::new(vec![ids(&[1, 2])], &inst).unwrap();
        let report = check_feasibility(&over, &inst, 0.0, &state);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(
            report.violations[0],
            Violation::CapacityExceeded { vehicle: 0, .. }
        ));

        let dup = Solution::new(vec![ids(&[1, 2]), ids(&[2])], &inst).unwrap();
        let report = check_feasibility(&dup, &inst, 0.0, &state);
        assert!(report
            .violations
            .contains(&Violation::DuplicateRequest(RequestId(2))));
    }

    #[test]
    fn hand_checked_schedule_is_feasible() {
        // Depot (0,0), speed 2, workday 20.
        // Vehicle 0: (3,4) service 2, then (6,8) service 1, home:
        //   2.5 + 2 + 2.5 + 1 + 5 = 13 <= 20.
        // Vehicle 1: (0,10) service 4: 5 + 4 + 5 = 14 <= 20.
        // Loads 7 + 3 = 10 and 9, capacity 10.
        let mk = |id, x, y, v, s| Request {
            id: RequestId(id),
            location: Point::new(x, y),
            volume: v,
            service_time: s,
            arrival_time: 0.0,
        };
        let inst = InstanceBuilder::new("h", Point::new(0.0, 0.0), 10.0, 20.0)
            .speed(2.0)
            .vehicles(2)
            .request(mk(1, 3.0, 4.0, 7.0, 2.0))
            .request(mk(2, 6.0, 8.0, 3.0, 1.0))
            .request(mk(3, 0.0, 10.0, 9.0, 4.0))
            .build()
            .unwrap();
        let sol = Solution::new(vec![ids(&[1, 2]), ids(&[3])], &inst).unwrap();
        let state = CommitmentState::initial(&inst);
        assert!(check_feasibility(&sol, &inst, 0.0, &state).is_feasible());

        // Shrinking the day to 13.5 keeps vehicle 0 but breaks vehicle 1.
        let tight = inst.to_builder();
        let tight = InstanceBuilder {
            workday_end: 13.5,
            cutoff_time: Some(5.0),
            ..tight
        }
        .build()
        .unwrap();
        let report = check_feasibility(&sol, &tight, 0.0, &CommitmentState::initial(&tight));
        assert_eq!(
            report.violations,
            vec![Violation::WorkdayOverrun {
                vehicle: 1,
                finish: 14.0,
                workday_end: 13.5
            }]
        );
    }
}
