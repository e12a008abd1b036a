//! Brute-force exact baselines for desk-scale instances.
//!
//! The transfer-free oracle enumerates every request-to-vehicle assignment
//! and, per vehicle, every precedence- and capacity-feasible interleaving of
//! pickups and dropoffs. The transfer oracle augments that space with at
//! most one synchronized transfer between the vehicle pair: every
//! post-pickup split point on both routes, every meeting node, every
//! reassignment of the combined onboard requests, and every dropoff order
//! after the meeting, subject to the synchronization window. Both refuse
//! instances beyond their limits instead of running open-ended, and both
//! return the lexicographically smallest plan among equal-cost optima.

use std::time::{Duration, Instant};

use itertools::Itertools;
use thiserror::Error;

use crate::eval::{eval_route, plan_cost, CostBreakdown};
use crate::grid::NodeId;
use crate::instance::Instance;
use crate::plan::{Event, EventKind, Plan};

/// Enumeration guard rails.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleLimits {
    pub max_vehicles: u32,
    pub max_requests: u32,
    /// Cap on the network size when transfers are enumerated.
    pub max_transfer_nodes: u32,
    pub time_budget: Option<Duration>,
}

impl OracleLimits {
    /// Defaults for the transfer-free oracle.
    pub fn pdp() -> Self {
        OracleLimits {
            max_vehicles: 3,
            max_requests: 4,
            max_transfer_nodes: u32::MAX,
            time_budget: None,
        }
    }

    /// Defaults for the transfer oracle.
    pub fn pdpset() -> Self {
        OracleLimits {
            max_vehicles: 2,
            max_requests: 3,
            max_transfer_nodes: 25,
            time_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance exceeds oracle limits: {dimension} = {value} > {limit}")]
    LimitExceeded { dimension: &'static str, value: u32, limit: u32 },
    #[error("oracle time budget of {0:?} exceeded")]
    TimeBudget(Duration),
    #[error("no feasible plan exists: {0}")]
    Infeasible(String),
}

/// An exact optimum: the plan and its cost breakdown.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub plan: Plan,
    pub cost: CostBreakdown,
}

/// Deterministic total order over plans, used to pick a canonical optimum
/// among ties.
fn encode_plan(plan: &Plan) -> Vec<u64> {
    let mut out = Vec::new();
    for route in &plan.routes {
        out.push(u64::MAX);
        for event in route {
            match &event.kind {
                EventKind::Pickup { request } => out.extend([0, *request as u64]),
                EventKind::Dropoff { request } => out.extend([1, *request as u64]),
                EventKind::Transfer { partner, outgoing, incoming } => {
                    out.extend([2, event.node.0 as u64, *partner as u64]);
                    out.extend(outgoing.iter().map(|&r| r as u64));
                    out.push(u64::MAX - 1);
                    out.extend(incoming.iter().map(|&r| r as u64));
                    out.push(u64::MAX - 1);
                }
            }
        }
    }
    out
}

struct Deadline {
    at: Option<Instant>,
    budget: Duration,
    counter: u32,
}

impl Deadline {
    fn new(budget: Option<Duration>) -> Self {
        Deadline {
            at: budget.map(|d| Instant::now() + d),
            budget: budget.unwrap_or_default(),
            counter: 0,
        }
    }

    fn check(&mut self) -> Result<(), OracleError> {
        self.counter = self.counter.wrapping_add(1);
        if self.counter % 1024 == 0 {
            if let Some(at) = self.at {
                if Instant::now() > at {
                    return Err(OracleError::TimeBudget(self.budget));
                }
            }
        }
        Ok(())
    }
}

fn check_servable(inst: &Instance) -> Result<(), OracleError> {
    let max_cap = inst.max_capacity();
    for r in &inst.requests {
        if r.qty > max_cap {
            return Err(OracleError::Infeasible(format!(
                "request {} exceeds every vehicle capacity",
                r.id
            )));
        }
    }
    Ok(())
}

/// Iterates all request-to-vehicle assignment vectors in mixed-radix order.
struct Assignments {
    current: Vec<usize>,
    n_vehicles: usize,
    done: bool,
}

impl Assignments {
    fn new(n_requests: usize, n_vehicles: usize) -> Self {
        Assignments { current: vec![0; n_requests], n_vehicles, done: false }
    }
}

impl Iterator for Assignments {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        self.done = true;
        for slot in self.current.iter_mut() {
            *slot += 1;
            if *slot < self.n_vehicles {
                self.done = false;
                break;
            }
            *slot = 0;
        }
        Some(out)
    }
}

/// All precedence- and capacity-valid event sequences over a request set,
/// reported to `visit` at every DFS state together with the picked/dropped
/// bitmasks.
fn walk_sequences<F: FnMut(&[Event], u32, u32)>(
    inst: &Instance,
    vehicle_idx: usize,
    reqs: &[usize],
    visit: &mut F,
) {
    fn rec<F: FnMut(&[Event], u32, u32)>(
        inst: &Instance,
        reqs: &[usize],
        cap: u32,
        seq: &mut Vec<Event>,
        picked: u32,
        dropped: u32,
        load: u32,
        visit: &mut F,
    ) {
        visit(seq, picked, dropped);
        for (bit, &ri) in reqs.iter().enumerate() {
            let req = &inst.requests[ri];
            let mask = 1u32 << bit;
            if picked & mask == 0 {
                if load + req.qty <= cap {
                    seq.push(Event::pickup(req.id, req.pickup));
                    rec(inst, reqs, cap, seq, picked | mask, dropped, load + req.qty, visit);
                    seq.pop();
                }
            } else if dropped & mask == 0 {
                seq.push(Event::dropoff(req.id, req.dropoff));
                rec(inst, reqs, cap, seq, picked, dropped | mask, load - req.qty, visit);
                seq.pop();
            }
        }
    }
    let cap = inst.vehicles[vehicle_idx].capacity;
    let mut seq = Vec::with_capacity(2 * reqs.len());
    rec(inst, reqs, cap, &mut seq, 0, 0, 0, visit);
}

/// Cheapest full sequence for one vehicle over its assigned requests,
/// breaking cost ties toward the lexicographically smallest route.
fn best_route(
    inst: &Instance,
    vehicle_idx: usize,
    reqs: &[usize],
    deadline: &mut Deadline,
) -> Result<Option<(Vec<Event>, f64)>, OracleError> {
    let full = (1u32 << reqs.len()) - 1;
    let mut best: Option<(f64, Vec<u64>, Vec<Event>)> = None;
    let mut budget_hit = None;
    walk_sequences(inst, vehicle_idx, reqs, &mut |seq, picked, dropped| {
        if picked != full || dropped != full || budget_hit.is_some() {
            return;
        }
        if let Err(e) = deadline.check() {
            budget_hit = Some(e);
            return;
        }
        let eval = eval_route(inst, vehicle_idx, seq);
        debug_assert!(eval.capacity_ok);
        let key: Option<Vec<u64>> = match &best {
            Some((c, enc, _)) => {
                if eval.cost < *c {
                    Some(Vec::new())
                } else if eval.cost == *c {
                    let enc_new = encode_plan(&Plan { routes: vec![seq.to_vec()] });
                    (enc_new < *enc).then_some(enc_new)
                } else {
                    None
                }
            }
            None => Some(Vec::new()),
        };
        if let Some(enc) = key {
            let enc = if enc.is_empty() {
                encode_plan(&Plan { routes: vec![seq.to_vec()] })
            } else {
                enc
            };
            best = Some((eval.cost, enc, seq.to_vec()));
        }
    });
    if let Some(e) = budget_hit {
        return Err(e);
    }
    Ok(best.map(|(c, _, seq)| (seq, c)))
}

struct Incumbent {
    cost: f64,
    encoding: Vec<u64>,
    plan: Plan,
}

impl Incumbent {
    fn offer(slot: &mut Option<Incumbent>, cost: f64, plan: Plan) {
        let encoding = encode_plan(&plan);
        let replace = match slot {
            None => true,
            Some(inc) => cost < inc.cost || (cost == inc.cost && encoding < inc.encoding),
        };
        if replace {
            *slot = Some(Incumbent { cost, encoding, plan });
        }
    }
}

/// Exact transfer-free optimum by exhaustive enumeration.
pub fn exact_pdp(inst: &Instance, lim: &OracleLimits) -> Result<OracleSolution, OracleError> {
    let k = inst.vehicles.len() as u32;
    let r = inst.requests.len() as u32;
    if k > lim.max_vehicles {
        return Err(OracleError::LimitExceeded {
            dimension: "vehicles",
            value: k,
            limit: lim.max_vehicles,
        });
    }
    if r > lim.max_requests {
        return Err(OracleError::LimitExceeded {
            dimension: "requests",
            value: r,
            limit: lim.max_requests,
        });
    }
    check_servable(inst)?;

    let mut deadline = Deadline::new(lim.time_budget);
    let mut best: Option<Incumbent> = None;
    for assignment in Assignments::new(inst.requests.len(), inst.vehicles.len()) {
        if let Some(plan_cost_pair) = assignment_best_plan(inst, &assignment, &mut deadline)? {
            Incumbent::offer(&mut best, plan_cost_pair.1, plan_cost_pair.0);
        }
    }
    finish(inst, best)
}

/// Per-vehicle independent optimization for one assignment vector; the
/// objective is additive across vehicles for transfer-free plans.
fn assignment_best_plan(
    inst: &Instance,
    assignment: &[usize],
    deadline: &mut Deadline,
) -> Result<Option<(Plan, f64)>, OracleError> {
    let mut routes = Vec::with_capacity(inst.vehicles.len());
    let mut total = 0.0;
    for vi in 0..inst.vehicles.len() {
        let reqs: Vec<usize> =
            (0..inst.requests.len()).filter(|&ri| assignment[ri] == vi).collect();
        if reqs.iter().any(|&ri| inst.requests[ri].qty > inst.vehicles[vi].capacity) {
            return Ok(None);
        }
        match best_route(inst, vi, &reqs, deadline)? {
            Some((route, cost)) => {
                total += cost;
                routes.push(route);
            }
            None => return Ok(None),
        }
    }
    Ok(Some((Plan { routes }, total)))
}

fn finish(inst: &Instance, best: Option<Incumbent>) -> Result<OracleSolution, OracleError> {
    let Some(inc) = best else {
        return Err(OracleError::Infeasible("no capacity-feasible assignment".into()));
    };
    let cost = plan_cost(inst, &inc.plan)
        .expect("enumerated optimum simulates cleanly");
    debug_assert_eq!(cost.total, inc.cost);
    Ok(OracleSolution { plan: inc.plan, cost })
}

/// A post-pickup route split: every pickup already placed, any subset of
/// dropoffs done, ready to host a transfer.
#[derive(Clone)]
struct Prefix {
    events: Vec<Event>,
    onboard: Vec<usize>,
    end: NodeId,
    end_time: f64,
}

fn enumerate_prefixes(inst: &Instance, vehicle_idx: usize, reqs: &[usize]) -> Vec<Prefix> {
    let full = (1u32 << reqs.len()) - 1;
    let mut out = Vec::new();
    walk_sequences(inst, vehicle_idx, reqs, &mut |seq, picked, dropped| {
        if picked != full {
            return;
        }
        let onboard: Vec<usize> = reqs
            .iter()
            .enumerate()
            .filter(|(bit, _)| picked & (1 << bit) != 0 && dropped & (1 << bit) == 0)
            .map(|(_, &ri)| ri)
            .collect();
        let eval = eval_route(inst, vehicle_idx, seq);
        out.push(Prefix {
            events: seq.to_vec(),
            onboard,
            end: seq.last().map_or(inst.vehicles[vehicle_idx].origin, |e| e.node),
            end_time: eval.arrivals.last().copied().unwrap_or(0.0),
        });
    });
    out
}

/// Exact optimum allowing at most one synchronized transfer between the
/// vehicle pair. Always at most the transfer-free optimum.
pub fn exact_pdpset(inst: &Instance, lim: &OracleLimits) -> Result<OracleSolution, OracleError> {
    let k = inst.vehicles.len() as u32;
    let r = inst.requests.len() as u32;
    let n = inst.network.n_nodes();
    if k > lim.max_vehicles {
        return Err(OracleError::LimitExceeded {
            dimension: "vehicles",
            value: k,
            limit: lim.max_vehicles,
        });
    }
    if r > lim.max_requests {
        return Err(OracleError::LimitExceeded {
            dimension: "requests",
            value: r,
            limit: lim.max_requests,
        });
    }
    if n > lim.max_transfer_nodes {
        return Err(OracleError::LimitExceeded {
            dimension: "network nodes",
            value: n,
            limit: lim.max_transfer_nodes,
        });
    }
    check_servable(inst)?;

    let mut deadline = Deadline::new(lim.time_budget);
    let mut best: Option<Incumbent> = None;
    for assignment in Assignments::new(inst.requests.len(), inst.vehicles.len()) {
        // transfer-free candidate
        if let Some((plan, cost)) = assignment_best_plan(inst, &assignment, &mut deadline)? {
            Incumbent::offer(&mut best, cost, plan);
        }
        if inst.vehicles.len() != 2 {
            continue;
        }
        // one synchronized transfer between the pair
        let reqs_a: Vec<usize> =
            (0..inst.requests.len()).filter(|&ri| assignment[ri] == 0).collect();
        let reqs_b: Vec<usize> =
            (0..inst.requests.len()).filter(|&ri| assignment[ri] == 1).collect();
        if reqs_a.iter().any(|&ri| inst.requests[ri].qty > inst.vehicles[0].capacity)
            || reqs_b.iter().any(|&ri| inst.requests[ri].qty > inst.vehicles[1].capacity)
        {
            continue;
        }
        let prefixes_a = enumerate_prefixes(inst, 0, &reqs_a);
        let prefixes_b = enumerate_prefixes(inst, 1, &reqs_b);
        for pa in &prefixes_a {
            for pb in &prefixes_b {
                let combined: Vec<usize> =
                    pa.onboard.iter().chain(&pb.onboard).copied().sorted().collect();
                if combined.is_empty() {
                    continue;
                }
                for x in (1..=n).map(NodeId) {
                    let arr_a = pa.end_time + inst.network.time(pa.end, x);
                    let arr_b = pb.end_time + inst.network.time(pb.end, x);
                    if (arr_a - arr_b).abs() > inst.d_max {
                        continue;
                    }
                    transfer_candidates(
                        inst,
                        (pa, pb),
                        &combined,
                        x,
                        &mut deadline,
                        &mut best,
                    )?;
                }
            }
        }
    }
    finish(inst, best)
}

fn transfer_candidates(
    inst: &Instance,
    (pa, pb): (&Prefix, &Prefix),
    combined: &[usize],
    node: NodeId,
    deadline: &mut Deadline,
    best: &mut Option<Incumbent>,
) -> Result<(), OracleError> {
    let onboard_a: Vec<usize> = pa.onboard.clone();
    let (id_a, id_b) = (inst.vehicles[0].id, inst.vehicles[1].id);
    for mask in 1u32..1 << combined.len() {
        let mut new_a = Vec::new();
        let mut new_b = Vec::new();
        let mut a_to_b = Vec::new();
        let mut b_to_a = Vec::new();
        for (bit, &ri) in combined.iter().enumerate() {
            let moves = mask & (1 << bit) != 0;
            let on_a = onboard_a.contains(&ri);
            match (on_a, moves) {
                (true, false) => new_a.push(ri),
                (true, true) => {
                    new_b.push(ri);
                    a_to_b.push(inst.requests[ri].id);
                }
                (false, false) => new_b.push(ri),
                (false, true) => {
                    new_a.push(ri);
                    b_to_a.push(inst.requests[ri].id);
                }
            }
        }
        let load = |set: &[usize]| set.iter().map(|&ri| inst.requests[ri].qty).sum::<u32>();
        if load(&new_a) > inst.vehicles[0].capacity || load(&new_b) > inst.vehicles[1].capacity {
            continue;
        }
        for order_a in new_a.iter().copied().permutations(new_a.len()) {
            for order_b in new_b.iter().copied().permutations(new_b.len()) {
                deadline.check()?;
                let mut route_a = pa.events.clone();
                route_a.push(Event::transfer(node, id_b, a_to_b.clone(), b_to_a.clone()));
                for &ri in &order_a {
                    let req = &inst.requests[ri];
                    route_a.push(Event::dropoff(req.id, req.dropoff));
                }
                let mut route_b = pb.events.clone();
                route_b.push(Event::transfer(node, id_a, b_to_a.clone(), a_to_b.clone()));
                for &ri in &order_b {
                    let req = &inst.requests[ri];
                    route_b.push(Event::dropoff(req.id, req.dropoff));
                }
                let plan = Plan { routes: vec![route_a, route_b] };
                let Ok(cost) = plan_cost(inst, &plan) else { continue };
                Incumbent::offer(best, cost.total, plan);
            }
        }
    }
    Ok(())
}
