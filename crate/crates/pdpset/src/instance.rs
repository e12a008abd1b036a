//! Problem instances: fleet, requests, objective weights, persistence.
//!
//! An [`Instance`] bundles the grid network with vehicles, requests, the four
//! objective weights, the transfer synchronization window `d_max`, and the
//! transfer search radius `t_range`, so that experiment inputs are fully
//! self-describing. Instances serialize to a small JSON schema documented in
//! the book; `load(save(x))` reproduces `x` field by field.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{build_grid, GridError, GridNetwork, NodeId};

/// A fleet vehicle: initial location and passenger capacity. Every vehicle
/// terminates at the shared dummy depot, reachable from any node at zero
/// cost and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: u32,
    pub origin: NodeId,
    pub capacity: u32,
}

/// A customer request: `qty` passengers travel together from `pickup` to
/// `dropoff` and cannot be split across vehicles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u32,
    pub pickup: NodeId,
    pub dropoff: NodeId,
    pub qty: u32,
}

/// Non-negative multipliers for the four objective components: vehicle
/// travel distance, customer wait time, customer travel distance, and
/// vehicle transfer time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub delta: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { alpha: 1.0, beta: 1.0, theta: 1.0, delta: 1.0 }
    }
}

impl Weights {
    pub fn unit() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub network: GridNetwork,
    pub vehicles: Vec<Vehicle>,
    pub requests: Vec<Request>,
    pub weights: Weights,
    /// Maximum allowed dwell of the earlier vehicle at a transfer meeting.
    pub d_max: f64,
    /// Search radius around each vehicle's post-pickup position limiting
    /// candidate transfer nodes in the heuristic.
    pub t_range: f64,
    pub seed: Option<u64>,
}

impl Instance {
    /// Position of the vehicle with the given id, if present.
    pub fn vehicle_index(&self, id: u32) -> Option<usize> {
        self.vehicles.iter().position(|v| v.id == id)
    }

    /// Position of the request with the given id, if present.
    pub fn request_index(&self, id: u32) -> Option<usize> {
        self.requests.iter().position(|r| r.id == id)
    }

    pub fn max_capacity(&self) -> u32 {
        self.vehicles.iter().map(|v| v.capacity).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Vec<InstanceViolation> {
        validate_instance(self)
    }
}

/// A broken instance invariant, naming the offending field and the rule.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceViolation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Checks every instance invariant; returns an empty list when the instance
/// is well-formed.
pub fn validate_instance(inst: &Instance) -> Vec<InstanceViolation> {
    let mut out = Vec::new();
    let mut push = |field: String, rule: &str| {
        out.push(InstanceViolation { field, rule: rule.to_string() });
    };

    if inst.vehicles.is_empty() {
        push("vehicles".into(), "at least one vehicle is required");
    }
    if inst.requests.is_empty() {
        push("requests".into(), "at least one request is required");
    }

    for (i, v) in inst.vehicles.iter().enumerate() {
        if v.capacity < 1 {
            push(format!("vehicles[{i}].capacity"), "capacity must be at least 1");
        }
        if !inst.network.contains(v.origin) {
            push(format!("vehicles[{i}].origin"), "origin is not a node of the network");
        }
        if inst.vehicles[..i].iter().any(|w| w.id == v.id) {
            push(format!("vehicles[{i}].id"), "vehicle id duplicates an earlier vehicle");
        }
    }

    let max_cap = inst.max_capacity();
    for (i, r) in inst.requests.iter().enumerate() {
        if !inst.network.contains(r.pickup) {
            push(format!("requests[{i}].pickup"), "pickup is not a node of the network");
        }
        if !inst.network.contains(r.dropoff) {
            push(format!("requests[{i}].dropoff"), "dropoff is not a node of the network");
        }
        if r.pickup == r.dropoff {
            push(format!("requests[{i}].dropoff"), "pickup and dropoff must differ");
        }
        if r.qty < 1 {
            push(format!("requests[{i}].qty"), "qty must be at least 1");
        }
        if !inst.vehicles.is_empty() && r.qty > max_cap {
            push(
                format!("requests[{i}].qty"),
                "request exceeds every vehicle capacity and passengers are not splittable",
            );
        }
        if inst.requests[..i].iter().any(|s| s.id == r.id) {
            push(format!("requests[{i}].id"), "request id duplicates an earlier request");
        }
    }

    for (name, w) in [
        ("weights.alpha", inst.weights.alpha),
        ("weights.beta", inst.weights.beta),
        ("weights.theta", inst.weights.theta),
        ("weights.delta", inst.weights.delta),
    ] {
        if !w.is_finite() || w < 0.0 {
            push(name.into(), "weight must be finite and non-negative");
        }
    }
    if !inst.d_max.is_finite() || inst.d_max < 0.0 {
        push("d_max".into(), "d_max must be finite and non-negative");
    }
    if !inst.t_range.is_finite() || inst.t_range < 0.0 {
        push("t_range".into(), "t_range must be finite and non-negative");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("cannot generate an instance: {0}")]
    Invalid(String),
}

/// Parameters for random instance generation.
#[derive(Debug, Clone)]
pub struct GenerateConfig {
    pub rows: u32,
    pub cols: u32,
    pub vehicles: u32,
    pub requests: u32,
    pub capacity: u32,
    pub weights: Weights,
    pub d_max: f64,
    pub t_range: f64,
    pub seed: u64,
}

/// Draws vehicle origins, pickups, and dropoffs independently and uniformly
/// over the grid nodes; within a request the dropoff is redrawn until it
/// differs from the pickup. Every request carries one passenger. The draw is
/// deterministic for a fixed seed.
pub fn generate_instance(cfg: &GenerateConfig) -> Result<Instance, GenerateError> {
    if cfg.vehicles < 1 {
        return Err(GenerateError::Invalid("need at least one vehicle".into()));
    }
    if cfg.requests < 1 {
        return Err(GenerateError::Invalid("need at least one request".into()));
    }
    if cfg.capacity < 1 {
        return Err(GenerateError::Invalid("vehicle capacity must be at least 1".into()));
    }
    let network = build_grid(cfg.rows, cfg.cols)?;
    let n = network.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draw = |rng: &mut ChaCha8Rng| NodeId(rng.random_range(1..=n));

    let vehicles = (1..=cfg.vehicles)
        .map(|id| Vehicle { id, origin: draw(&mut rng), capacity: cfg.capacity })
        .collect();
    let requests = (1..=cfg.requests)
        .map(|id| {
            let pickup = draw(&mut rng);
            let mut dropoff = draw(&mut rng);
            while dropoff == pickup {
                dropoff = draw(&mut rng);
            }
            Request { id, pickup, dropoff, qty: 1 }
        })
        .collect();

    let inst = Instance {
        network,
        vehicles,
        requests,
        weights: cfg.weights,
        d_max: cfg.d_max,
        t_range: cfg.t_range,
        seed: Some(cfg.seed),
    };
    let violations = validate_instance(&inst);
    if let Some(v) = violations.first() {
        return Err(GenerateError::Invalid(v.to_string()));
    }
    Ok(inst)
}

/// A document that fails to parse or that breaks an instance invariant; the
/// path points at the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid instance document at `{path}`: {message}")]
pub struct ParseError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridDims {
    rows: u32,
    cols: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    grid: GridDims,
    weights: Weights,
    d_max: f64,
    t_range: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    vehicles: Vec<Vehicle>,
    requests: Vec<Request>,
}

/// Serializes an instance to its JSON document.
pub fn save_instance(inst: &Instance) -> String {
    let doc = InstanceDoc {
        grid: GridDims { rows: inst.network.rows(), cols: inst.network.cols() },
        weights: inst.weights,
        d_max: inst.d_max,
        t_range: inst.t_range,
        seed: inst.seed,
        vehicles: inst.vehicles.clone(),
        requests: inst.requests.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("instance serialization");
    text.push('\n');
    text
}

/// Parses an instance document and checks every invariant.
pub fn load_instance(text: &str) -> Result<Instance, ParseError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let doc: InstanceDoc = serde_path_to_error::deserialize(&mut de).map_err(|e| ParseError {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let network = build_grid(doc.grid.rows, doc.grid.cols)
        .map_err(|e| ParseError { path: "grid".into(), message: e.to_string() })?;
    let inst = Instance {
        network,
        vehicles: doc.vehicles,
        requests: doc.requests,
        weights: doc.weights,
        d_max: doc.d_max,
        t_range: doc.t_range,
        seed: doc.seed,
    };
    if let Some(v) = validate_instance(&inst).into_iter().next() {
        return Err(ParseError { path: v.field, message: v.rule });
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s1_config(seed: u64) -> GenerateConfig {
        GenerateConfig {
            rows: 5,
            cols: 5,
            vehicles: 2,
            requests: 3,
            capacity: 6,
            weights: Weights::unit(),
            d_max: 2.0,
            t_range: 8.0,
            seed,
        }
    }

    /// Two vehicles at nodes 2 and 9 (capacity 3), requests 1->20, 7->19,
    /// 3->25. Used as the worked example throughout the test suite.
    pub(crate) fn demo_instance() -> Instance {
        Instance {
            network: build_grid(5, 5).unwrap(),
            vehicles: vec![
                Vehicle { id: 1, origin: NodeId(2), capacity: 3 },
                Vehicle { id: 2, origin: NodeId(9), capacity: 3 },
            ],
            requests: vec![
                Request { id: 1, pickup: NodeId(1), dropoff: NodeId(20), qty: 1 },
                Request { id: 2, pickup: NodeId(7), dropoff: NodeId(19), qty: 1 },
                Request { id: 3, pickup: NodeId(3), dropoff: NodeId(25), qty: 1 },
            ],
            weights: Weights::unit(),
            d_max: 2.0,
            t_range: 8.0,
            seed: None,
        }
    }

    #[test]
    fn generates_valid_instance() {
        let inst = generate_instance(&s1_config(7)).unwrap();
        assert_eq!(inst.network.n_nodes(), 25);
        assert_eq!(inst.vehicles.len(), 2);
        assert_eq!(inst.requests.len(), 3);
        assert!(inst.requests.iter().all(|r| r.qty == 1));
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance(&s1_config(42)).unwrap();
        let b = generate_instance(&s1_config(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seed_sweep_validates_clean() {
        for seed in 0..100 {
            let inst = generate_instance(&s1_config(seed)).unwrap();
            assert!(validate_instance(&inst).is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn distinct_seeds_rarely_collide() {
        let mut collisions = 0;
        for seed in 0..100u64 {
            let a = generate_instance(&s1_config(2 * seed)).unwrap();
            let b = generate_instance(&s1_config(2 * seed + 1)).unwrap();
            if a.vehicles == b.vehicles && a.requests == b.requests {
                collisions += 1;
            }
        }
        assert!(collisions <= 1, "{collisions} identical draws in 100 seed pairs");
    }

    #[test]
    fn generation_rejects_impossible_parameters() {
        let mut cfg = s1_config(1);
        cfg.rows = 1;
        cfg.cols = 1;
        assert!(matches!(generate_instance(&cfg), Err(GenerateError::Grid(_))));
        let mut cfg = s1_config(1);
        cfg.requests = 0;
        assert!(matches!(generate_instance(&cfg), Err(GenerateError::Invalid(_))));
    }

    #[test]
    fn demo_instance_is_clean() {
        assert!(validate_instance(&demo_instance()).is_empty());
    }

    #[test]
    fn pickup_equal_dropoff_is_flagged() {
        let mut inst = demo_instance();
        inst.requests[1].dropoff = inst.requests[1].pickup;
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "requests[1].dropoff");
    }

    #[test]
    fn oversized_request_is_unservable() {
        let mut inst = demo_instance();
        inst.vehicles[0].capacity = 6;
        inst.vehicles[1].capacity = 6;
        inst.requests[0].qty = 7;
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "requests[0].qty");
        assert!(v[0].rule.contains("not splittable"));
    }

    #[test]
    fn round_trip_demo() {
        let inst = demo_instance();
        let text = save_instance(&inst);
        let back = load_instance(&text).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn empty_vehicle_list_fails_to_load() {
        let mut inst = demo_instance();
        inst.vehicles.clear();
        let text = save_instance(&inst);
        let err = load_instance(&text).unwrap_err();
        assert_eq!(err.path, "vehicles");
    }

    #[test]
    fn parse_error_names_the_path() {
        let text = r#"{
            "grid": {"rows": 5, "cols": 5},
            "weights": {"alpha": 1, "beta": 1, "theta": 1, "delta": 1},
            "d_max": 2, "t_range": 8,
            "vehicles": [{"id": 1, "origin": 2, "capacity": "three"}],
            "requests": [{"id": 1, "pickup": 1, "dropoff": 20, "qty": 1}]
        }"#;
        let err = load_instance(text).unwrap_err();
        assert!(err.path.contains("vehicles[0].capacity"), "path was {}", err.path);
    }

    #[test]
    fn schema_keys_are_stable() {
        let text = save_instance(&demo_instance());
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let obj = value.as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        assert_eq!(keys, vec!["grid", "weights", "d_max", "t_range", "vehicles", "requests"]);
        assert_eq!(value["vehicles"][0]["origin"], serde_json::json!(2));
    }

    proptest! {
        #[test]
        fn random_instances_round_trip(seed in 0u64..500) {
            let mut cfg = s1_config(seed);
            cfg.vehicles = 1 + (seed % 4) as u32;
            cfg.requests = 1 + (seed % 6) as u32;
            let inst = generate_instance(&cfg).unwrap();
            let back = load_instance(&save_instance(&inst)).unwrap();
            prop_assert_eq!(inst, back);
        }
    }
}
