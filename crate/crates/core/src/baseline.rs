//! Reference heuristics: a nearest-neighbor tour builder for static
//! instances and a greedy-insertion day solver.

use crate::domain::{path_length, suffix_finish, Node, ProblemInstance, Solution, FEASIBILITY_EPS};
use crate::dynamics::{DvrpSolver, FrozenSnapshot};
use crate::error::Result;
use crate::local_search::{apply_insertion, best_insertion, two_opt_path};

/// Nearest-neighbor routes over all requests (arrival times ignored),
/// each polished with 2-OPT.
///
/// A vehicle keeps taking the closest unvisited request that still fits
/// its capacity and the working day; when none fits it returns and the
/// next vehicle starts. Ties go to the lower request index.
pub fn nearest_neighbor_two_opt(instance: &ProblemInstance) -> Solution {
    let n = instance.requests().len();
    let capacity = instance.fleet().capacity;
    let mut visited = vec![false; n + 1];
    let mut remaining = n;
    let mut routes: Vec<Vec<Node>> = Vec::new();
    while remaining > 0 {
        let mut route = Vec::new();
        let mut load = 0.0;
        let mut at = 0;
        loop {
            let mut best: Option<(Node, f64)> = None;
            for node in 1..=n {
                if visited[node]
                    || load + instance.node_volume(node) > capacity * (1.0 + FEASIBILITY_EPS)
                {
                    continue;
                }
                let d = instance.dist(at, node);
                if best.is_some_and(|b| d >= b.1) {
                    continue;
                }
                route.push(node);
                let finish = suffix_finish(instance, 0, 0.0, 0.0, &route);
                route.pop();
                if finish <= instance.workday_end() * (1.0 + FEASIBILITY_EPS) || route.is_empty() {
                    best = Some((node, d));
                }
            }
            let Some((node, _)) = best else { break };
            visited[node] = true;
            remaining -= 1;
            load += instance.node_volume(node);
            route.push(node);
            at = node;
        }
        two_opt_path(instance, 0, &mut route);
        routes.push(route);
    }
    Solution::from_nodes(&routes, instance)
}

/// Length of [`nearest_neighbor_two_opt`] without building the solution twice.
pub fn baseline_cost(instance: &ProblemInstance) -> f64 {
    let sol = nearest_neighbor_two_opt(instance);
    sol.node_routes(instance)
        .map(|routes| routes.iter().map(|r| path_length(instance, 0, r)).sum())
        .unwrap_or(f64::INFINITY)
}

/// Keeps the previous plan and inserts every new request at its cheapest
/// feasible slot, in arrival order then id order. Spends no budget.
#[derive(Clone, Debug, Default)]
pub struct GreedyInsertionSolver {
    plan: Vec<Vec<Node>>,
}

impl GreedyInsertionSolver {
    pub fn new() -> Self {
        Self::default()
    }
}

impl DvrpSolver for GreedyInsertionSolver {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn optimize(&mut self, snapshot: &FrozenSnapshot<'_>, _budget: u64) -> Result<Solution> {
        let inst = snapshot.instance;
        let state = &snapshot.commitment;
        let free: std::collections::HashSet<Node> = snapshot.free_nodes().into_iter().collect();
        // Committed prefixes plus the still-free part of the previous plan.
        let mut routes = state.prefix_nodes(inst);
        for (v, old) in self.plan.iter().enumerate() {
            if v >= routes.len() {
                routes.resize(v + 1, Vec::new());
            }
            let keep: Vec<Node> = old.iter().copied().filter(|n| free.contains(n)).collect();
            routes[v].extend(keep);
        }
        let placed: std::collections::HashSet<Node> = routes.iter().flatten().copied().collect();
        for node in snapshot.free_nodes() {
            if !placed.contains(&node) {
                let ins = best_insertion(inst, &routes, state, snapshot.time, node);
                apply_insertion(&mut routes, &ins, node);
            }
        }
        let span = routes
            .iter()
            .rposition(|r| !r.is_empty())
            .map_or(0, |i| i + 1);
        routes.truncate(span);
        self.plan = routes.clone();
        Ok(Solution::from_nodes(&routes, inst))
    }
}
