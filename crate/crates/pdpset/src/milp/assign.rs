//! Converting plans into model assignments and auditing assignments
//! against every row.
//!
//! The model admits each node at most once per vehicle (arrival-time
//! continuity excludes cycles), so a plan converts only when every travel
//! leg can be expanded into a shortest path that avoids the nodes the
//! vehicle has already visited. Expansion fails with a representability
//! error otherwise; this is the documented gap between the free-routing
//! plan semantics and the flow model.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::eval::{check_feasible, simulate};
use crate::grid::{GridNetwork, NodeId};
use crate::instance::Instance;
use crate::plan::{EventKind, Plan};

use super::build::{f_name, s_name, tp_name, tv_name, u_name, v_name, w_name, x_name, y_name, z_name};
use super::{Assignment, MilpModel, Sense, VarKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssignError {
    #[error("plan is not feasible: {0}")]
    InfeasiblePlan(String),
    #[error("route of vehicle {vehicle} cannot reach node {node} on a shortest path without revisiting a node; the flow model admits each node at most once per vehicle")]
    NotRepresentable { vehicle: u32, node: u32 },
    #[error("request {request} is picked up or dropped off at its transfer node {node}; the flow model cannot express a handover without an arc on each side")]
    DegenerateTransfer { request: u32, node: u32 },
}

/// Finds a shortest path segment from `from` to `to` avoiding `visited`,
/// shortest under both the cost and the time metric. Neighbor exploration
/// is in ascending node order, so the expansion is deterministic.
fn find_segment(
    net: &GridNetwork,
    from: NodeId,
    to: NodeId,
    visited: &HashSet<NodeId>,
) -> Option<Vec<NodeId>> {
    const EPS: f64 = 1e-9;
    fn rec(
        net: &GridNetwork,
        cur: NodeId,
        to: NodeId,
        visited: &mut HashSet<NodeId>,
        out: &mut Vec<NodeId>,
    ) -> bool {
        if cur == to {
            return true;
        }
        for next in net.neighbors(cur) {
            if visited.contains(&next) {
                continue;
            }
            let on_cost = (net.dist(next, to) - (net.dist(cur, to) - net.arc_cost(cur, next).unwrap()))
                .abs()
                < EPS;
            let on_time = (net.time(next, to) - (net.time(cur, to) - net.arc_time(cur, next).unwrap()))
                .abs()
                < EPS;
            if !on_cost || !on_time {
                continue;
            }
            visited.insert(next);
            out.push(next);
            if rec(net, next, to, visited, out) {
                return true;
            }
            out.pop();
            visited.remove(&next);
        }
        false
    }
    let mut visited = visited.clone();
    let mut out = Vec::new();
    rec(net, from, to, &mut visited, &mut out).then_some(out)
}

/// Converts a feasible plan into a full variable assignment of the model
/// built for the same instance.
pub fn plan_to_assignment(inst: &Instance, plan: &Plan) -> Result<Assignment, AssignError> {
    if let Some(v) = check_feasible(inst, plan).into_iter().next() {
        return Err(AssignError::InfeasiblePlan(v.to_string()));
    }
    let schedule = simulate(inst, plan).expect("feasible plans simulate cleanly");
    let depot = inst.network.n_nodes() + 1;
    let mut asg = Assignment::new();

    // per-vehicle expanded paths and arrival clocks, kept for the passenger
    // pass below
    let mut paths: Vec<Vec<NodeId>> = Vec::with_capacity(plan.routes.len());
    let mut clocks: Vec<HashMap<NodeId, f64>> = Vec::with_capacity(plan.routes.len());
    for (vi, route) in plan.routes.iter().enumerate() {
        let vehicle = &inst.vehicles[vi];
        let k = vehicle.id;
        let mut dwell_at: HashMap<NodeId, f64> = HashMap::new();
        for (ei, event) in route.iter().enumerate() {
            let d = schedule.vehicles[vi].events[ei].dwell;
            if d > 0.0 {
                *dwell_at.entry(event.node).or_insert(0.0) += d;
            }
        }

        let mut path = vec![vehicle.origin];
        let mut visited: HashSet<NodeId> = HashSet::from([vehicle.origin]);
        let mut current = vehicle.origin;
        for event in route {
            if event.node == current {
                continue;
            }
            let segment = find_segment(&inst.network, current, event.node, &visited)
                .ok_or(AssignError::NotRepresentable { vehicle: k, node: event.node.0 })?;
            for n in &segment {
                visited.insert(*n);
            }
            path.extend(segment);
            current = event.node;
        }

        // arc traversal variables and arrival clock along the path
        let mut tv: HashMap<NodeId, f64> = HashMap::new();
        let mut clock = 0.0;
        tv.insert(path[0], 0.0);
        for pair in path.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            asg.set(x_name(a.0, b.0, k), 1.0);
            clock += dwell_at.get(&a).copied().unwrap_or(0.0);
            clock += inst.network.arc_time(a, b).unwrap();
            tv.insert(b, clock);
        }
        let last = *path.last().unwrap();
        asg.set(x_name(last.0, depot, k), 1.0);
        clock += dwell_at.get(&last).copied().unwrap_or(0.0);
        let depot_time = clock;

        for (&node, &t) in &tv {
            asg.set(tv_name(node.0, k), t);
        }
        asg.set(tv_name(depot, k), depot_time);
        for (&node, &d) in &dwell_at {
            asg.set(u_name(node.0, k), d);
        }

        // continuity dummies along traversed arcs; untraversed pairs stay 0
        for pair in path.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let d = dwell_at.get(&a).copied().unwrap_or(0.0);
            let t = inst.network.arc_time(a, b).unwrap();
            asg.set(z_name(a.0, b.0, k), tv[&a] + t + d);
            asg.set(z_name(b.0, a.0, k), tv[&b]);
            if d > 0.0 {
                asg.set(s_name(a.0, b.0, k), d);
            }
        }
        let dl = dwell_at.get(&last).copied().unwrap_or(0.0);
        asg.set(z_name(last.0, depot, k), tv[&last] + dl);
        asg.set(z_name(depot, last.0, k), depot_time);
        if dl > 0.0 {
            asg.set(s_name(last.0, depot, k), dl);
        }

        paths.push(path);
        clocks.push(tv);
    }

    // passenger pass: carried intervals, transfers, pickup assignment
    for (vi, route) in plan.routes.iter().enumerate() {
        let vehicle = &inst.vehicles[vi];
        let k = vehicle.id;
        let positions: HashMap<NodeId, usize> =
            paths[vi].iter().enumerate().map(|(i, &n)| (n, i)).collect();
        // request id -> node where it came onboard this vehicle
        let mut onboard_since: HashMap<u32, NodeId> = HashMap::new();
        let write_interval = |asg: &mut Assignment, r: u32, s: NodeId, e: NodeId| {
            if s == e {
                return Err(AssignError::DegenerateTransfer { request: r, node: s.0 });
            }
            let (si, ei) = (positions[&s], positions[&e]);
            debug_assert!(si < ei);
            for w in paths[vi][si..=ei].windows(2) {
                asg.set(y_name(w[0].0, w[1].0, k, r), 1.0);
                asg.set(tp_name(w[1].0, r), clocks[vi][&w[1]]);
            }
            Ok(())
        };
        for event in route {
            match &event.kind {
                EventKind::Pickup { request } => {
                    onboard_since.insert(*request, event.node);
                    asg.set(v_name(k, *request), 1.0);
                    let t = schedule.pickup_time[request];
                    asg.set(w_name(k, *request), t);
                    asg.set(tp_name(event.node.0, *request), t);
                }
                EventKind::Dropoff { request } => {
                    let s = onboard_since.remove(request).expect("feasible plan");
                    write_interval(&mut asg, *request, s, event.node)?;
                }
                EventKind::Transfer { partner, outgoing, incoming } => {
                    for r in outgoing {
                        let s = onboard_since.remove(r).expect("feasible plan");
                        write_interval(&mut asg, *r, s, event.node)?;
                        asg.set(f_name(*r, event.node.0, k, *partner), 1.0);
                    }
                    for r in incoming {
                        if onboard_since.insert(*r, event.node).is_some() {
                            unreachable!("feasible plans never double-board");
                        }
                    }
                }
            }
        }
    }
    Ok(asg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Row,
    LowerBound,
    UpperBound,
    Integrality,
}

/// One violated row or variable attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Violated {
    pub name: String,
    pub kind: ViolationKind,
    /// Evaluated left-hand side (rows) or variable value (bounds).
    pub value: f64,
    /// The bound the value breaks.
    pub bound: f64,
}

impl fmt::Display for Violated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::Row => {
                write!(f, "row {}: lhs {} violates rhs {}", self.name, self.value, self.bound)
            }
            ViolationKind::LowerBound => {
                write!(f, "variable {} = {} below lower bound {}", self.name, self.value, self.bound)
            }
            ViolationKind::UpperBound => {
                write!(f, "variable {} = {} above upper bound {}", self.name, self.value, self.bound)
            }
            ViolationKind::Integrality => {
                write!(f, "binary variable {} = {} is fractional", self.name, self.value)
            }
        }
    }
}

/// Evaluates every linear row, every variable bound, and binary
/// integrality within `tol`. Violations come back in model registration
/// order: rows first, then variable attributes.
pub fn check_assignment(model: &MilpModel, asg: &Assignment, tol: f64) -> Vec<Violated> {
    let mut out = Vec::new();
    let values: Vec<f64> = model.vars().iter().map(|v| asg.get(&v.name)).collect();
    for row in model.rows() {
        let lhs: f64 = row.terms.iter().map(|&(vi, c)| c * values[vi]).sum();
        let bad = match row.sense {
            Sense::Le => lhs > row.rhs + tol,
            Sense::Ge => lhs < row.rhs - tol,
            Sense::Eq => (lhs - row.rhs).abs() > tol,
        };
        if bad {
            out.push(Violated {
                name: row.name.clone(),
                kind: ViolationKind::Row,
                value: lhs,
                bound: row.rhs,
            });
        }
    }
    for (var, &v) in model.vars().iter().zip(&values) {
        if v < var.lb - tol {
            out.push(Violated {
                name: var.name.clone(),
                kind: ViolationKind::LowerBound,
                value: v,
                bound: var.lb,
            });
        }
        if v > var.ub + tol {
            out.push(Violated {
                name: var.name.clone(),
                kind: ViolationKind::UpperBound,
                value: v,
                bound: var.ub,
            });
        }
        if var.kind == VarKind::Binary && (v - v.round()).abs() > tol {
            out.push(Violated {
                name: var.name.clone(),
                kind: ViolationKind::Integrality,
                value: v,
                bound: v.round(),
            });
        }
    }
    out
}

/// Objective value of an assignment under the model's coefficients.
pub fn objective_value(model: &MilpModel, asg: &Assignment) -> f64 {
    model
        .vars()
        .iter()
        .filter(|v| v.obj != 0.0)
        .map(|v| v.obj * asg.get(&v.name))
        .sum()
}
