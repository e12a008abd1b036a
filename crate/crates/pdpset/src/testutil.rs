//! Shared fixtures for unit tests: the two-vehicle worked example used
//! throughout the crate documentation, plus its two reference plans.

use crate::grid::{build_grid, NodeId};
use crate::instance::{Instance, Request, Vehicle, Weights};
use crate::plan::{Event, Plan};

/// 5x5 grid, vehicles at nodes 2 and 9 (capacity 3), unit requests
/// 1->20, 7->19, 3->25, unit weights, d_max 2, t_range 8.
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

/// Best transfer-free dispatch of the demo instance: vehicle 1 serves
/// requests 1 and 2, vehicle 2 serves request 3. Total cost 39.
pub(crate) fn demo_pdp_plan() -> Plan {
    Plan {
        routes: vec![
            vec![
                Event::pickup(1, NodeId(1)),
                Event::pickup(2, NodeId(7)),
                Event::dropoff(2, NodeId(19)),
                Event::dropoff(1, NodeId(20)),
            ],
            vec![Event::pickup(3, NodeId(3)), Event::dropoff(3, NodeId(25))],
        ],
    }
}

/// Transfer variant of the demo dispatch: both vehicles meet at node 8,
/// request 3 switches to vehicle 1 which finishes all dropoffs. Total 36.
pub(crate) fn demo_pdpset_plan() -> Plan {
    Plan {
        routes: vec![
            vec![
                Event::pickup(1, NodeId(1)),
                Event::pickup(2, NodeId(7)),
                Event::transfer(NodeId(8), 2, vec![], vec![3]),
                Event::dropoff(2, NodeId(19)),
                Event::dropoff(1, NodeId(20)),
                Event::dropoff(3, NodeId(25)),
            ],
            vec![
                Event::pickup(3, NodeId(3)),
                Event::transfer(NodeId(8), 1, vec![3], vec![]),
            ],
        ],
    }
}
