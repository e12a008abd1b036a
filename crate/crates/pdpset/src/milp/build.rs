//! Model construction: variables, objective, and every constraint family.
//!
//! The network is extended by a shared dummy depot node (id `n + 1`) with a
//! zero-cost, zero-time inbound arc from every physical node and no outbound
//! arcs; every vehicle terminates there. Families quantified over arcs are
//! emitted once per directed arc. The arrival-time continuity linearization
//! works on arc pairs: its equality and activation/value/lower rows are
//! emitted once per unordered pair (both orientations covered), while the
//! dwell-linking rows follow the directed arcs; for depot arcs the terms
//! whose variables do not exist (the depot has no outbound arcs) drop out.

use std::collections::HashMap;

use crate::grid::NodeId;
use crate::instance::Instance;

use super::{MilpModel, Sense, VarKind};

pub(crate) fn x_name(i: u32, j: u32, k: u32) -> String {
    format!("X_{i}_{j}_{k}")
}
pub(crate) fn y_name(i: u32, j: u32, k: u32, r: u32) -> String {
    format!("Y_{i}_{j}_{k}_{r}")
}
pub(crate) fn v_name(k: u32, r: u32) -> String {
    format!("V_{k}_{r}")
}
pub(crate) fn f_name(r: u32, i: u32, k: u32, l: u32) -> String {
    format!("F_{r}_{i}_{k}_{l}")
}
pub(crate) fn tv_name(i: u32, k: u32) -> String {
    format!("TV_{i}_{k}")
}
pub(crate) fn tp_name(i: u32, r: u32) -> String {
    format!("TP_{i}_{r}")
}
pub(crate) fn u_name(i: u32, k: u32) -> String {
    format!("U_{i}_{k}")
}
pub(crate) fn z_name(i: u32, j: u32, k: u32) -> String {
    format!("Z_{i}_{j}_{k}")
}
pub(crate) fn s_name(i: u32, j: u32, k: u32) -> String {
    format!("S_{i}_{j}_{k}")
}
pub(crate) fn w_name(k: u32, r: u32) -> String {
    format!("W_{k}_{r}")
}

/// Arc and node index sets of the depot-extended network.
pub(crate) struct ModelIndex {
    pub n: u32,
    pub depot: u32,
    /// Directed arcs, physical both ways plus one `(i, depot)` per node,
    /// ascending by `(i, j)`.
    pub arcs: Vec<(u32, u32)>,
    /// Ordered pairs carrying a continuity variable: every arc plus the
    /// reversed depot arcs `(depot, i)`.
    pub zpairs: Vec<(u32, u32)>,
    /// Unordered continuity pairs in canonical orientation: each physical
    /// edge once (`i < j`) plus each depot arc.
    pub edges: Vec<(u32, u32)>,
    out_arcs: Vec<Vec<(u32, u32)>>,
    in_arcs: Vec<Vec<(u32, u32)>>,
    times: HashMap<(u32, u32), f64>,
    costs: HashMap<(u32, u32), f64>,
}

impl ModelIndex {
    pub fn new(inst: &Instance) -> Self {
        let net = &inst.network;
        let n = net.n_nodes();
        let depot = n + 1;
        let mut arcs = Vec::new();
        let mut edges = Vec::new();
        let mut out_arcs = vec![Vec::new(); (depot + 1) as usize];
        let mut in_arcs = vec![Vec::new(); (depot + 1) as usize];
        let mut times = HashMap::new();
        let mut costs = HashMap::new();
        for i in 1..=n {
            for j in net.neighbors(NodeId(i)).map(|j| j.0) {
                arcs.push((i, j));
                out_arcs[i as usize].push((i, j));
                in_arcs[j as usize].push((i, j));
                times.insert((i, j), net.arc_time(NodeId(i), NodeId(j)).unwrap());
                costs.insert((i, j), net.arc_cost(NodeId(i), NodeId(j)).unwrap());
                if i < j {
                    edges.push((i, j));
                }
            }
            arcs.push((i, depot));
            out_arcs[i as usize].push((i, depot));
            in_arcs[depot as usize].push((i, depot));
            times.insert((i, depot), 0.0);
            costs.insert((i, depot), 0.0);
            edges.push((i, depot));
        }
        arcs.sort_unstable();
        edges.sort_unstable();
        let mut zpairs = arcs.clone();
        zpairs.extend((1..=n).map(|i| (depot, i)));
        ModelIndex { n, depot, arcs, zpairs, edges, out_arcs, in_arcs, times, costs }
    }

    pub fn all_nodes(&self) -> impl Iterator<Item = u32> + '_ {
        (1..=self.n).chain([self.depot])
    }

    pub fn out_arcs(&self, i: u32) -> &[(u32, u32)] {
        &self.out_arcs[i as usize]
    }

    pub fn in_arcs(&self, i: u32) -> &[(u32, u32)] {
        &self.in_arcs[i as usize]
    }

    pub fn is_arc(&self, i: u32, j: u32) -> bool {
        self.times.contains_key(&(i, j))
    }

    pub fn time(&self, i: u32, j: u32) -> f64 {
        self.times[&(i, j)]
    }

    pub fn cost(&self, i: u32, j: u32) -> f64 {
        self.costs[&(i, j)]
    }
}

/// Instance-specific big-M: `diameter * (2|R| + 2) + d_max * |R| * |K| + 1`.
///
/// A route visits at most `2|R| + 2` stops, consecutive stops are at most a
/// network diameter apart, and total dwell is bounded by the window per
/// request and vehicle, so the value strictly exceeds every feasible
/// arrival time.
pub fn compute_big_m(inst: &Instance) -> f64 {
    let diameter = inst.network.diameter_time();
    let r = inst.requests.len() as f64;
    let k = inst.vehicles.len() as f64;
    diameter * (2.0 * r + 2.0) + inst.d_max * r * k + 1.0
}

struct Vars {
    x: HashMap<(u32, u32, u32), usize>,
    y: HashMap<(u32, u32, u32, u32), usize>,
    v: HashMap<(u32, u32), usize>,
    f: HashMap<(u32, u32, u32, u32), usize>,
    tv: HashMap<(u32, u32), usize>,
    tp: HashMap<(u32, u32), usize>,
    u: HashMap<(u32, u32), usize>,
    z: HashMap<(u32, u32, u32), usize>,
    s: HashMap<(u32, u32, u32), usize>,
    w: HashMap<(u32, u32), usize>,
}

/// Builds the complete model for an instance.
pub fn build_model(inst: &Instance) -> MilpModel {
    let idx = ModelIndex::new(inst);
    let big_m = compute_big_m(inst);
    let mut model = MilpModel { big_m, depot: idx.depot, ..Default::default() };
    let inf = f64::INFINITY;
    let d_max = inst.d_max;
    let vehicle_ids: Vec<u32> = inst.vehicles.iter().map(|v| v.id).collect();
    let request_ids: Vec<u32> = inst.requests.iter().map(|r| r.id).collect();

    // variable registration, family by family
    let mut vars = Vars {
        x: HashMap::new(),
        y: HashMap::new(),
        v: HashMap::new(),
        f: HashMap::new(),
        tv: HashMap::new(),
        tp: HashMap::new(),
        u: HashMap::new(),
        z: HashMap::new(),
        s: HashMap::new(),
        w: HashMap::new(),
    };
    for &(i, j) in &idx.arcs {
        for &k in &vehicle_ids {
            let id = model.add_var("X", x_name(i, j, k), VarKind::Binary, 0.0, 1.0);
            vars.x.insert((i, j, k), id);
        }
    }
    for &(i, j) in &idx.arcs {
        for &k in &vehicle_ids {
            for &r in &request_ids {
                let id = model.add_var("Y", y_name(i, j, k, r), VarKind::Binary, 0.0, 1.0);
                vars.y.insert((i, j, k, r), id);
            }
        }
    }
    for &k in &vehicle_ids {
        for &r in &request_ids {
            let id = model.add_var("V", v_name(k, r), VarKind::Binary, 0.0, 1.0);
            vars.v.insert((k, r), id);
        }
    }
    for &r in &request_ids {
        for i in idx.all_nodes() {
            for &k in &vehicle_ids {
                for &l in &vehicle_ids {
                    if k == l {
                        continue;
                    }
                    let id = model.add_var("F", f_name(r, i, k, l), VarKind::Binary, 0.0, 1.0);
                    vars.f.insert((r, i, k, l), id);
                }
            }
        }
    }
    for i in idx.all_nodes() {
        for &k in &vehicle_ids {
            let id = model.add_var("TV", tv_name(i, k), VarKind::Continuous, 0.0, inf);
            vars.tv.insert((i, k), id);
        }
    }
    for i in idx.all_nodes() {
        for &r in &request_ids {
            let id = model.add_var("TP", tp_name(i, r), VarKind::Continuous, 0.0, inf);
            vars.tp.insert((i, r), id);
        }
    }
    for i in idx.all_nodes() {
        for &k in &vehicle_ids {
            let id = model.add_var("U", u_name(i, k), VarKind::Continuous, 0.0, d_max);
            vars.u.insert((i, k), id);
        }
    }
    for &(i, j) in &idx.zpairs {
        for &k in &vehicle_ids {
            let id = model.add_var("Z", z_name(i, j, k), VarKind::Continuous, 0.0, inf);
            vars.z.insert((i, j, k), id);
        }
    }
    for &(i, j) in &idx.arcs {
        for &k in &vehicle_ids {
            let id = model.add_var("S", s_name(i, j, k), VarKind::Continuous, 0.0, d_max);
            vars.s.insert((i, j, k), id);
        }
    }
    for &k in &vehicle_ids {
        for &r in &request_ids {
            let id = model.add_var("W", w_name(k, r), VarKind::Continuous, 0.0, inf);
            vars.w.insert((k, r), id);
        }
    }

    // objective: weighted vehicle distance, wait time, passenger distance,
    // transfer dwell
    let w = &inst.weights;
    for &(i, j) in &idx.arcs {
        let c = idx.cost(i, j);
        if w.alpha * c != 0.0 {
            for &k in &vehicle_ids {
                model.add_obj(vars.x[&(i, j, k)], w.alpha * c);
            }
        }
    }
    for req in &inst.requests {
        let coef = w.beta * req.qty as f64;
        if coef != 0.0 {
            model.add_obj(vars.tp[&(req.pickup.0, req.id)], coef);
        }
    }
    for &(i, j) in &idx.arcs {
        let c = idx.cost(i, j);
        for req in &inst.requests {
            let coef = w.theta * c * req.qty as f64;
            if coef != 0.0 {
                for &k in &vehicle_ids {
                    model.add_obj(vars.y[&(i, j, k, req.id)], coef);
                }
            }
        }
    }
    if w.delta != 0.0 {
        for i in idx.all_nodes() {
            for &k in &vehicle_ids {
                model.add_obj(vars.u[&(i, k)], w.delta);
            }
        }
    }

    // each vehicle leaves its origin once
    for vehicle in &inst.vehicles {
        let k = vehicle.id;
        let terms = idx
            .out_arcs(vehicle.origin.0)
            .iter()
            .map(|&(i, j)| (vars.x[&(i, j, k)], 1.0))
            .collect();
        model.add_row("veh_origin", format!("veh_origin_{k}"), terms, Sense::Eq, 1.0);
    }
    // and terminates at the depot once
    for &k in &vehicle_ids {
        let terms = idx
            .in_arcs(idx.depot)
            .iter()
            .map(|&(i, j)| (vars.x[&(i, j, k)], 1.0))
            .collect();
        model.add_row("veh_dest", format!("veh_dest_{k}"), terms, Sense::Eq, 1.0);
    }
    // vehicle flow conservation away from origin and depot
    for vehicle in &inst.vehicles {
        let k = vehicle.id;
        for i in 1..=idx.n {
            if i == vehicle.origin.0 {
                continue;
            }
            let mut terms: Vec<(usize, f64)> =
                idx.out_arcs(i).iter().map(|&(a, b)| (vars.x[&(a, b, k)], 1.0)).collect();
            terms.extend(idx.in_arcs(i).iter().map(|&(a, b)| (vars.x[&(a, b, k)], -1.0)));
            model.add_row("veh_flow", format!("veh_flow_{i}_{k}"), terms, Sense::Eq, 0.0);
        }
    }
    // each request leaves its pickup with exactly one vehicle
    for req in &inst.requests {
        let r = req.id;
        let mut terms = Vec::new();
        for &k in &vehicle_ids {
            terms.extend(
                idx.out_arcs(req.pickup.0).iter().map(|&(i, j)| (vars.y[&(i, j, k, r)], 1.0)),
            );
        }
        model.add_row("req_pickup", format!("req_pickup_{r}"), terms, Sense::Eq, 1.0);
    }
    // and enters its dropoff with exactly one vehicle
    for req in &inst.requests {
        let r = req.id;
        let mut terms = Vec::new();
        for &k in &vehicle_ids {
            terms.extend(
                idx.in_arcs(req.dropoff.0).iter().map(|&(i, j)| (vars.y[&(i, j, k, r)], 1.0)),
            );
        }
        model.add_row("req_dropoff", format!("req_dropoff_{r}"), terms, Sense::Eq, 1.0);
    }
    // passenger flow conservation elsewhere
    for req in &inst.requests {
        let r = req.id;
        for i in idx.all_nodes() {
            if i == req.pickup.0 || i == req.dropoff.0 {
                continue;
            }
            let mut terms = Vec::new();
            for &k in &vehicle_ids {
                terms.extend(idx.out_arcs(i).iter().map(|&(a, b)| (vars.y[&(a, b, k, r)], 1.0)));
                terms.extend(idx.in_arcs(i).iter().map(|&(a, b)| (vars.y[&(a, b, k, r)], -1.0)));
            }
            model.add_row("req_flow", format!("req_flow_{i}_{r}"), terms, Sense::Eq, 0.0);
        }
    }
    // passengers ride only on traversed arcs, within capacity
    for &(i, j) in &idx.arcs {
        for vehicle in &inst.vehicles {
            let k = vehicle.id;
            let mut terms: Vec<(usize, f64)> = inst
                .requests
                .iter()
                .map(|req| (vars.y[&(i, j, k, req.id)], req.qty as f64))
                .collect();
            terms.push((vars.x[&(i, j, k)], -(vehicle.capacity as f64)));
            model.add_row("cap", format!("cap_{i}_{j}_{k}"), terms, Sense::Le, 0.0);
        }
    }
    // one vehicle per request per arc
    for &(i, j) in &idx.arcs {
        for &r in &request_ids {
            let terms = vehicle_ids.iter().map(|&k| (vars.y[&(i, j, k, r)], 1.0)).collect();
            model.add_row("arc_once", format!("arc_once_{i}_{j}_{r}"), terms, Sense::Le, 1.0);
        }
    }
    // no passenger flow into the depot
    for &k in &vehicle_ids {
        let mut terms = Vec::new();
        for &(i, j) in idx.in_arcs(idx.depot) {
            for &r in &request_ids {
                terms.push((vars.y[&(i, j, k, r)], 1.0));
            }
        }
        model.add_row("depot_nopax", format!("depot_nopax_{k}"), terms, Sense::Eq, 0.0);
    }
    // passenger time propagation along carried arcs
    let big = big_m;
    for &(i, j) in &idx.arcs {
        let t = idx.time(i, j);
        for &r in &request_ids {
            let mut terms = vec![(vars.tp[&(i, r)], 1.0), (vars.tp[&(j, r)], -1.0)];
            for &k in &vehicle_ids {
                terms.push((vars.y[&(i, j, k, r)], big));
            }
            model.add_row("ptime", format!("ptime_{i}_{j}_{r}"), terms, Sense::Le, big - t);
        }
    }
    // pickup happens before dropoff
    for req in &inst.requests {
        let r = req.id;
        let terms =
            vec![(vars.tp[&(req.pickup.0, r)], 1.0), (vars.tp[&(req.dropoff.0, r)], -1.0)];
        model.add_row("prec", format!("prec_{r}"), terms, Sense::Le, 0.0);
    }
    // operations start at time zero
    for vehicle in &inst.vehicles {
        let k = vehicle.id;
        let terms = vec![(vars.tv[&(vehicle.origin.0, k)], 1.0)];
        model.add_row("tstart", format!("tstart_{k}"), terms, Sense::Eq, 0.0);
    }
    // arrival times vanish at unvisited nodes
    for i in idx.all_nodes() {
        for &k in &vehicle_ids {
            let mut terms = vec![(vars.tv[&(i, k)], 1.0)];
            for &(a, b) in idx.out_arcs(i) {
                terms.push((vars.x[&(a, b, k)], -big));
            }
            for &(a, b) in idx.in_arcs(i) {
                terms.push((vars.x[&(a, b, k)], -big));
            }
            model.add_row("tactive", format!("tactive_{i}_{k}"), terms, Sense::Le, 0.0);
        }
    }
    // arrival-time continuity, linearized on arc pairs
    for &(a, b) in &idx.edges {
        for &k in &vehicle_ids {
            let terms = vec![(vars.z[&(a, b, k)], 1.0), (vars.z[&(b, a, k)], -1.0)];
            model.add_row("zeq", format!("zeq_{a}_{b}_{k}"), terms, Sense::Eq, 0.0);
        }
    }
    for &(p, q) in &idx.zpairs {
        for &k in &vehicle_ids {
            let mut terms = vec![(vars.z[&(p, q, k)], 1.0)];
            if idx.is_arc(p, q) {
                terms.push((vars.x[&(p, q, k)], -big));
            }
            if idx.is_arc(q, p) {
                terms.push((vars.x[&(q, p, k)], -big));
            }
            model.add_row("zflow", format!("zflow_{p}_{q}_{k}"), terms, Sense::Le, 0.0);
        }
    }
    for &(p, q) in &idx.zpairs {
        for &k in &vehicle_ids {
            let mut terms = vec![(vars.z[&(p, q, k)], 1.0), (vars.tv[&(p, k)], -1.0)];
            if idx.is_arc(p, q) {
                let t = idx.time(p, q);
                if t != 0.0 {
                    terms.push((vars.x[&(p, q, k)], -t));
                }
                terms.push((vars.s[&(p, q, k)], -1.0));
            }
            model.add_row("zub", format!("zub_{p}_{q}_{k}"), terms, Sense::Le, 0.0);
        }
    }
    for &(p, q) in &idx.zpairs {
        for &k in &vehicle_ids {
            let mut terms = vec![(vars.z[&(p, q, k)], 1.0), (vars.tv[&(p, k)], -1.0)];
            if idx.is_arc(p, q) {
                terms.push((vars.x[&(p, q, k)], -(idx.time(p, q) + big)));
                terms.push((vars.s[&(p, q, k)], -1.0));
            }
            if idx.is_arc(q, p) {
                terms.push((vars.x[&(q, p, k)], -big));
            }
            model.add_row("zlb", format!("zlb_{p}_{q}_{k}"), terms, Sense::Ge, -big);
        }
    }
    // dwell continuity along traversed arcs
    for &(p, q) in &idx.arcs {
        for &k in &vehicle_ids {
            let terms = vec![(vars.s[&(p, q, k)], 1.0), (vars.x[&(p, q, k)], -big)];
            model.add_row("sflow", format!("sflow_{p}_{q}_{k}"), terms, Sense::Le, 0.0);
        }
    }
    for &(p, q) in &idx.arcs {
        for &k in &vehicle_ids {
            let terms = vec![(vars.s[&(p, q, k)], 1.0), (vars.u[&(p, k)], -1.0)];
            model.add_row("sub", format!("sub_{p}_{q}_{k}"), terms, Sense::Le, 0.0);
        }
    }
    for &(p, q) in &idx.arcs {
        for &k in &vehicle_ids {
            let terms = vec![
                (vars.s[&(p, q, k)], 1.0),
                (vars.u[&(p, k)], -1.0),
                (vars.x[&(p, q, k)], -big),
            ];
            model.add_row("slb", format!("slb_{p}_{q}_{k}"), terms, Sense::Ge, -big);
        }
    }
    // pickup vehicle assignment
    for &k in &vehicle_ids {
        for req in &inst.requests {
            let r = req.id;
            let mut terms = vec![(vars.v[&(k, r)], 1.0)];
            terms.extend(
                idx.out_arcs(req.pickup.0).iter().map(|&(i, j)| (vars.y[&(i, j, k, r)], -1.0)),
            );
            model.add_row("pickup_assign", format!("pickup_assign_{k}_{r}"), terms, Sense::Eq, 0.0);
        }
    }
    // wait time equals the assigned vehicle's arrival at the pickup
    for req in &inst.requests {
        let r = req.id;
        let mut terms = vec![(vars.tp[&(req.pickup.0, r)], 1.0)];
        terms.extend(vehicle_ids.iter().map(|&k| (vars.w[&(k, r)], -1.0)));
        model.add_row("wait_total", format!("wait_total_{r}"), terms, Sense::Eq, 0.0);
    }
    for &k in &vehicle_ids {
        for &r in &request_ids {
            let terms = vec![(vars.w[&(k, r)], 1.0), (vars.v[&(k, r)], -big)];
            model.add_row("wflow", format!("wflow_{k}_{r}"), terms, Sense::Le, 0.0);
        }
    }
    for &k in &vehicle_ids {
        for req in &inst.requests {
            let r = req.id;
            let terms = vec![(vars.w[&(k, r)], 1.0), (vars.tv[&(req.pickup.0, k)], -1.0)];
            model.add_row("wub", format!("wub_{k}_{r}"), terms, Sense::Le, 0.0);
        }
    }
    for &k in &vehicle_ids {
        for req in &inst.requests {
            let r = req.id;
            let terms = vec![
                (vars.w[&(k, r)], 1.0),
                (vars.tv[&(req.pickup.0, k)], -1.0),
                (vars.v[&(k, r)], -big),
            ];
            model.add_row("wlb", format!("wlb_{k}_{r}"), terms, Sense::Ge, -big);
        }
    }
    // transfer capture: F = 1 exactly when the request rides into the node
    // with one vehicle and out with the other
    for &r in &request_ids {
        for i in idx.all_nodes() {
            for &k in &vehicle_ids {
                for &l in &vehicle_ids {
                    if k == l {
                        continue;
                    }
                    let f = vars.f[&(r, i, k, l)];
                    let mut and_terms: Vec<(usize, f64)> =
                        idx.in_arcs(i).iter().map(|&(a, b)| (vars.y[&(a, b, k, r)], 1.0)).collect();
                    and_terms
                        .extend(idx.out_arcs(i).iter().map(|&(a, b)| (vars.y[&(a, b, l, r)], 1.0)));
                    and_terms.push((f, -1.0));
                    model.add_row("xfer_and", format!("xfer_and_{r}_{i}_{k}_{l}"), and_terms, Sense::Le, 1.0);
                }
            }
        }
    }
    for &r in &request_ids {
        for i in idx.all_nodes() {
            for &k in &vehicle_ids {
                for &l in &vehicle_ids {
                    if k == l {
                        continue;
                    }
                    let f = vars.f[&(r, i, k, l)];
                    let mut terms = vec![(f, 1.0)];
                    terms.extend(idx.in_arcs(i).iter().map(|&(a, b)| (vars.y[&(a, b, k, r)], -1.0)));
                    model.add_row("xfer_in", format!("xfer_in_{r}_{i}_{k}_{l}"), terms, Sense::Le, 0.0);
                }
            }
        }
    }
    for &r in &request_ids {
        for i in idx.all_nodes() {
            for &k in &vehicle_ids {
                for &l in &vehicle_ids {
                    if k == l {
                        continue;
                    }
                    let f = vars.f[&(r, i, k, l)];
                    let mut terms = vec![(f, 1.0)];
                    terms
                        .extend(idx.out_arcs(i).iter().map(|&(a, b)| (vars.y[&(a, b, l, r)], -1.0)));
                    model.add_row("xfer_out", format!("xfer_out_{r}_{i}_{k}_{l}"), terms, Sense::Le, 0.0);
                }
            }
        }
    }
    // dwell only at transfer meetings
    for i in idx.all_nodes() {
        for &k in &vehicle_ids {
            let mut terms = vec![(vars.u[&(i, k)], 1.0)];
            for &r in &request_ids {
                for &l in &vehicle_ids {
                    if l == k {
                        continue;
                    }
                    terms.push((vars.f[&(r, i, k, l)], -big));
                    terms.push((vars.f[&(r, i, l, k)], -big));
                }
            }
            model.add_row("dwell_gate", format!("dwell_gate_{i}_{k}"), terms, Sense::Le, 0.0);
        }
    }
    // synchronization: both vehicles are present during the handover
    for &r in &request_ids {
        for i in idx.all_nodes() {
            for &k in &vehicle_ids {
                for &l in &vehicle_ids {
                    if k == l {
                        continue;
                    }
                    let terms = vec![
                        (vars.tv[&(i, k)], 1.0),
                        (vars.tv[&(i, l)], -1.0),
                        (vars.u[&(i, l)], -1.0),
                        (vars.f[&(r, i, k, l)], big),
                    ];
                    model.add_row("sync_a", format!("sync_a_{r}_{i}_{k}_{l}"), terms, Sense::Le, big);
                }
            }
        }
    }
    for &r in &request_ids {
        for i in idx.all_nodes() {
            for &k in &vehicle_ids {
                for &l in &vehicle_ids {
                    if k == l {
                        continue;
                    }
                    let terms = vec![
                        (vars.tv[&(i, l)], 1.0),
                        (vars.tv[&(i, k)], -1.0),
                        (vars.u[&(i, k)], -1.0),
                        (vars.f[&(r, i, k, l)], big),
                    ];
                    model.add_row("sync_b", format!("sync_b_{r}_{i}_{k}_{l}"), terms, Sense::Le, big);
                }
            }
        }
    }

    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::instance::{Instance, Request, Vehicle, Weights};
    use crate::testutil::demo_instance;

    /// Independent closed-form index counts for a unit grid instance.
    struct Counts {
        n: u32,
        edges: u32,
        arcs: u32,
        nodes_with_depot: u32,
        k: u32,
        r: u32,
    }

    fn counts(inst: &Instance) -> Counts {
        let rows = inst.network.rows();
        let cols = inst.network.cols();
        let n = rows * cols;
        let edges = rows * (cols - 1) + cols * (rows - 1);
        Counts {
            n,
            edges,
            arcs: 2 * edges + n,
            nodes_with_depot: n + 1,
            k: inst.vehicles.len() as u32,
            r: inst.requests.len() as u32,
        }
    }

    #[test]
    fn variable_families_match_index_arithmetic() {
        let inst = demo_instance();
        let model = build_model(&inst);
        let c = counts(&inst);
        let vf = model.var_family_counts();
        assert_eq!(vf["X"], (c.arcs * c.k) as usize);
        assert_eq!(vf["Y"], (c.arcs * c.k * c.r) as usize);
        assert_eq!(vf["V"], (c.k * c.r) as usize);
        assert_eq!(vf["F"], (c.r * c.nodes_with_depot * c.k * (c.k - 1)) as usize);
        assert_eq!(vf["TV"], (c.nodes_with_depot * c.k) as usize);
        assert_eq!(vf["TP"], (c.nodes_with_depot * c.r) as usize);
        assert_eq!(vf["U"], (c.nodes_with_depot * c.k) as usize);
        assert_eq!(vf["Z"], ((2 * c.edges + 2 * c.n) * c.k) as usize);
        assert_eq!(vf["S"], (c.arcs * c.k) as usize);
        assert_eq!(vf["W"], (c.k * c.r) as usize);
        // spot values from the 5x5 demo: 105 arcs with the depot
        assert_eq!(vf["X"], 210);
        assert_eq!(vf["Y"], 630);
    }

    #[test]
    fn row_families_match_index_arithmetic() {
        let inst = demo_instance();
        let model = build_model(&inst);
        let c = counts(&inst);
        let rf = model.row_family_counts();
        let pairs = (c.edges + c.n) as usize; // physical edges plus depot arcs
        let f_rows = (c.r * c.nodes_with_depot * c.k * (c.k - 1)) as usize;
        assert_eq!(rf["veh_origin"], c.k as usize);
        assert_eq!(rf["veh_dest"], c.k as usize);
        assert_eq!(rf["veh_flow"], ((c.n - 1) * c.k) as usize);
        assert_eq!(rf["req_pickup"], c.r as usize);
        assert_eq!(rf["req_dropoff"], c.r as usize);
        assert_eq!(rf["req_flow"], ((c.nodes_with_depot - 2) * c.r) as usize);
        assert_eq!(rf["cap"], (c.arcs * c.k) as usize);
        assert_eq!(rf["arc_once"], (c.arcs * c.r) as usize);
        assert_eq!(rf["depot_nopax"], c.k as usize);
        assert_eq!(rf["ptime"], (c.arcs * c.r) as usize);
        assert_eq!(rf["prec"], c.r as usize);
        assert_eq!(rf["tstart"], c.k as usize);
        assert_eq!(rf["tactive"], (c.nodes_with_depot * c.k) as usize);
        assert_eq!(rf["zeq"], pairs * c.k as usize);
        assert_eq!(rf["zflow"], 2 * pairs * c.k as usize);
        assert_eq!(rf["zub"], 2 * pairs * c.k as usize);
        assert_eq!(rf["zlb"], 2 * pairs * c.k as usize);
        assert_eq!(rf["sflow"], (c.arcs * c.k) as usize);
        assert_eq!(rf["sub"], (c.arcs * c.k) as usize);
        assert_eq!(rf["slb"], (c.arcs * c.k) as usize);
        assert_eq!(rf["pickup_assign"], (c.k * c.r) as usize);
        assert_eq!(rf["wait_total"], c.r as usize);
        assert_eq!(rf["wflow"], (c.k * c.r) as usize);
        assert_eq!(rf["wub"], (c.k * c.r) as usize);
        assert_eq!(rf["wlb"], (c.k * c.r) as usize);
        assert_eq!(rf["xfer_and"], f_rows);
        assert_eq!(rf["xfer_in"], f_rows);
        assert_eq!(rf["xfer_out"], f_rows);
        assert_eq!(rf["dwell_gate"], (c.nodes_with_depot * c.k) as usize);
        assert_eq!(rf["sync_a"], f_rows);
        assert_eq!(rf["sync_b"], f_rows);
        // every family is present and non-empty
        assert_eq!(rf.len(), 30);
        assert!(rf.values().all(|&n| n > 0));
    }

    #[test]
    fn unique_names() {
        let model = build_model(&demo_instance());
        let mut names: Vec<&str> = model.vars().iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), model.n_vars());
        let mut rows: Vec<&str> = model.rows().iter().map(|r| r.name.as_str()).collect();
        rows.sort_unstable();
        rows.dedup();
        assert_eq!(rows.len(), model.n_rows());
    }

    #[test]
    fn single_vehicle_has_no_transfer_machinery() {
        let mut inst = demo_instance();
        inst.vehicles.truncate(1);
        let model = build_model(&inst);
        let vf = model.var_family_counts();
        assert!(!vf.contains_key("F"));
        let rf = model.row_family_counts();
        for fam in ["xfer_and", "xfer_in", "xfer_out", "sync_a", "sync_b"] {
            assert!(!rf.contains_key(fam), "{fam} should be empty with one vehicle");
        }
        // the dwell gate persists and pins U to zero
        assert_eq!(rf["dwell_gate"], 26);
    }

    #[test]
    fn big_m_values() {
        let inst = demo_instance();
        assert_eq!(compute_big_m(&inst), 77.0);

        let tiny = Instance {
            network: build_grid(1, 2).unwrap(),
            vehicles: vec![Vehicle { id: 1, origin: crate::grid::NodeId(1), capacity: 1 }],
            requests: vec![Request {
                id: 1,
                pickup: crate::grid::NodeId(1),
                dropoff: crate::grid::NodeId(2),
                qty: 1,
            }],
            weights: Weights::unit(),
            d_max: 0.0,
            t_range: 0.0,
            seed: None,
        };
        assert_eq!(compute_big_m(&tiny), 5.0);
    }

    #[test]
    fn u_and_s_are_window_bounded() {
        let inst = demo_instance();
        let model = build_model(&inst);
        for v in model.vars() {
            match v.name.split('_').next().unwrap() {
                "U" | "S" => assert_eq!(v.ub, 2.0, "{}", v.name),
                "X" | "Y" | "V" | "F" => assert_eq!((v.lb, v.ub), (0.0, 1.0), "{}", v.name),
                _ => assert_eq!(v.ub, f64::INFINITY, "{}", v.name),
            }
        }
    }
}
