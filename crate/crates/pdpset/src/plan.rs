//! Plan representation and its JSON document form.
//!
//! A plan holds one ordered event list per vehicle, aligned with the
//! instance's vehicle order. Vehicles travel between consecutive event
//! locations along shortest paths; pickups and dropoffs take zero time, and
//! a transfer event names the partner vehicle plus the request sets handed
//! over in each direction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::NodeId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Pickup { request: u32 },
    Dropoff { request: u32 },
    /// Meet `partner` (a vehicle id) at this node; `outgoing` requests leave
    /// this vehicle for the partner, `incoming` arrive from it.
    Transfer { partner: u32, outgoing: Vec<u32>, incoming: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub node: NodeId,
    pub kind: EventKind,
}

impl Event {
    pub fn pickup(request: u32, node: NodeId) -> Self {
        Event { node, kind: EventKind::Pickup { request } }
    }

    pub fn dropoff(request: u32, node: NodeId) -> Self {
        Event { node, kind: EventKind::Dropoff { request } }
    }

    pub fn transfer(node: NodeId, partner: u32, outgoing: Vec<u32>, incoming: Vec<u32>) -> Self {
        Event { node, kind: EventKind::Transfer { partner, outgoing, incoming } }
    }

    pub fn is_pickup(&self) -> bool {
        matches!(self.kind, EventKind::Pickup { .. })
    }

    pub fn is_transfer(&self) -> bool {
        matches!(self.kind, EventKind::Transfer { .. })
    }
}

/// Per-vehicle event sequences, index-aligned with `Instance::vehicles`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Plan {
    pub routes: Vec<Vec<Event>>,
}

impl Plan {
    pub fn empty(n_vehicles: usize) -> Self {
        Plan { routes: vec![Vec::new(); n_vehicles] }
    }

    pub fn n_events(&self) -> usize {
        self.routes.iter().map(Vec::len).sum()
    }

    /// True when no route contains a transfer event.
    pub fn is_transfer_free(&self) -> bool {
        self.routes.iter().flatten().all(|e| !e.is_transfer())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid plan document at `{path}`: {message}")]
pub struct PlanParseError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct EventDoc {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    request: Option<u32>,
    node: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partner: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    out: Option<Vec<u32>>,
    #[serde(rename = "in", default, skip_serializing_if = "Option::is_none")]
    incoming: Option<Vec<u32>>,
}

fn to_doc(event: &Event) -> EventDoc {
    let mut doc = EventDoc {
        kind: String::new(),
        request: None,
        node: event.node.0,
        partner: None,
        out: None,
        incoming: None,
    };
    match &event.kind {
        EventKind::Pickup { request } => {
            doc.kind = "pickup".into();
            doc.request = Some(*request);
        }
        EventKind::Dropoff { request } => {
            doc.kind = "dropoff".into();
            doc.request = Some(*request);
        }
        EventKind::Transfer { partner, outgoing, incoming } => {
            doc.kind = "transfer".into();
            doc.partner = Some(*partner);
            doc.out = Some(outgoing.clone());
            doc.incoming = Some(incoming.clone());
        }
    }
    doc
}

fn from_doc(doc: EventDoc, path: &str) -> Result<Event, PlanParseError> {
    let err = |message: String| PlanParseError { path: path.to_string(), message };
    let node = NodeId(doc.node);
    let kind = match doc.kind.as_str() {
        "pickup" => EventKind::Pickup {
            request: doc.request.ok_or_else(|| err("pickup event needs a request".into()))?,
        },
        "dropoff" => EventKind::Dropoff {
            request: doc.request.ok_or_else(|| err("dropoff event needs a request".into()))?,
        },
        "transfer" => EventKind::Transfer {
            partner: doc.partner.ok_or_else(|| err("transfer event needs a partner".into()))?,
            outgoing: doc.out.unwrap_or_default(),
            incoming: doc.incoming.unwrap_or_default(),
        },
        other => return Err(err(format!("unknown event kind `{other}`"))),
    };
    Ok(Event { node, kind })
}

/// Serializes a plan to its JSON document: one array of event objects per
/// vehicle, in instance vehicle order.
pub fn save_plan(plan: &Plan) -> String {
    let docs: Vec<Vec<EventDoc>> =
        plan.routes.iter().map(|route| route.iter().map(to_doc).collect()).collect();
    let mut text = serde_json::to_string_pretty(&docs).expect("plan serialization");
    text.push('\n');
    text
}

/// Parses a plan document.
pub fn load_plan(text: &str) -> Result<Plan, PlanParseError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let docs: Vec<Vec<EventDoc>> =
        serde_path_to_error::deserialize(&mut de).map_err(|e| PlanParseError {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    let mut routes = Vec::with_capacity(docs.len());
    for (vi, events) in docs.into_iter().enumerate() {
        let mut route = Vec::with_capacity(events.len());
        for (ei, doc) in events.into_iter().enumerate() {
            route.push(from_doc(doc, &format!("[{vi}][{ei}]"))?);
        }
        routes.push(route);
    }
    Ok(Plan { routes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_plan() -> Plan {
        Plan {
            routes: vec![
                vec![
                    Event::pickup(1, NodeId(1)),
                    Event::transfer(NodeId(8), 2, vec![], vec![3]),
                    Event::dropoff(1, NodeId(20)),
                    Event::dropoff(3, NodeId(25)),
                ],
                vec![Event::pickup(3, NodeId(3)), Event::transfer(NodeId(8), 1, vec![3], vec![])],
            ],
        }
    }

    #[test]
    fn round_trip() {
        let plan = sample_plan();
        assert_eq!(load_plan(&save_plan(&plan)).unwrap(), plan);
    }

    #[test]
    fn document_shape() {
        let text = save_plan(&sample_plan());
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v[0][0]["kind"], "pickup");
        assert_eq!(v[0][0]["request"], 1);
        assert_eq!(v[0][0]["node"], 1);
        assert_eq!(v[1][1]["kind"], "transfer");
        assert_eq!(v[1][1]["partner"], 1);
        assert_eq!(v[1][1]["out"], serde_json::json!([3]));
        assert_eq!(v[1][1]["in"], serde_json::json!([]));
        assert!(v[0][0].get("partner").is_none());
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let text = r#"[[{"kind": "teleport", "node": 4}]]"#;
        let err = load_plan(text).unwrap_err();
        assert_eq!(err.path, "[0][0]");
        assert!(err.message.contains("teleport"));
    }

    #[test]
    fn transfer_needs_partner() {
        let text = r#"[[{"kind": "transfer", "node": 4, "out": [1]}]]"#;
        assert!(load_plan(text).is_err());
    }
}
