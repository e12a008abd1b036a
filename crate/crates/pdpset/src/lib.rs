//! Planning toolkit for pickup-and-delivery fleets with synchronized
//! en-route transfers.
//!
//! A dispatch problem here consists of a grid network, a fleet of
//! capacitated vehicles, and passenger requests that must travel from a
//! pickup node to a dropoff node. Passengers may switch vehicles mid-route:
//! both vehicles drive to a meeting node chosen from the network, and the
//! earlier arrival waits for its partner within a hard synchronization
//! window. The objective is the weighted sum of vehicle travel distance,
//! customer wait time, customer travel distance, and vehicle transfer time.
//!
//! The crate provides:
//!
//! - [`grid`]: grid networks with shortest-path and range queries,
//! - [`instance`]: the problem data model with generation and JSON
//!   persistence,
//! - [`plan`] / [`eval`]: plan representation, schedule simulation,
//!   feasibility checking, and cost accounting,
//! - [`milp`]: a complete mixed-integer model of the problem, exported in
//!   LP format for external solvers, with assignment checking,
//! - [`heuristic`]: the two-phase solver (greedy insertion construction,
//!   then pairwise transfer improvement),
//! - [`oracle`]: brute-force exact baselines for desk-scale instances,
//! - [`bench`]: the experiment harness behind the command-line tool.
//!
//! ```
//! use pdpset::prelude::*;
//!
//! let inst = generate_instance(&GenerateConfig {
//!     rows: 5, cols: 5, vehicles: 2, requests: 3, capacity: 6,
//!     weights: Weights::unit(), d_max: 2.0, t_range: 8.0, seed: 7,
//! })?;
//! let plan = phase1_construct(&inst)?;
//! let improved = phase2_improve(&inst, &plan);
//! let cost = plan_cost(&inst, &improved)?;
//! assert!(cost.total <= plan_cost(&inst, &plan)?.total);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod bench;
pub mod eval;
pub mod grid;
pub mod heuristic;
pub mod instance;
pub mod milp;
pub mod oracle;
pub mod plan;

#[cfg(test)]
pub(crate) mod testutil;

/// The commonly used surface in one import.
pub mod prelude {
    pub use crate::bench::{run_scenario, Method, ScenarioSpec};
    pub use crate::eval::{
        check_feasible, cost_breakdown, plan_cost, simulate, CostBreakdown, Schedule,
    };
    pub use crate::grid::{build_grid, Cost, GridNetwork, NodeId, Time};
    pub use crate::heuristic::{
        best_transfer_for_pair, phase1_construct, phase2_improve, resequence_dropoffs,
    };
    pub use crate::instance::{
        generate_instance, load_instance, save_instance, validate_instance, GenerateConfig,
        Instance, Request, Vehicle, Weights,
    };
    pub use crate::milp::{
        build_model, check_assignment, compute_big_m, export_lp, objective_value,
        plan_to_assignment, Assignment, MilpModel,
    };
    pub use crate::oracle::{exact_pdp, exact_pdpset, OracleLimits};
    pub use crate::plan::{load_plan, save_plan, Event, EventKind, Plan};
}
