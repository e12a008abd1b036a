//! Rectangular grid networks with shortest-path queries.
//!
//! Nodes are numbered `1..=rows*cols` in row-major order (node 1 sits at
//! row 1, column 1; the node at `(row, col)` is `(row-1)*cols + col`). Every
//! undirected grid edge is materialized as two directed arcs with symmetric
//! cost and time. The default network is unit-weighted, where shortest
//! distances collapse to the Manhattan closed form; per-edge overrides fall
//! back to Dijkstra with a per-source cache.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Travel cost in distance units.
pub type Cost = f64;
/// Travel time in time units.
pub type Time = f64;

/// 1-based row-major node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid grid dimensions {rows}x{cols}: need rows >= 1, cols >= 1 and at least 2 nodes")]
    InvalidDimension { rows: u32, cols: u32 },
    #[error("node {node} is out of range (valid ids are 1..={max})")]
    InvalidNode { node: u32, max: u32 },
    #[error("nodes {a} and {b} do not share a grid edge")]
    NotAdjacent { a: u32, b: u32 },
}

/// An undirected grid graph with per-edge cost and time.
pub struct GridNetwork {
    rows: u32,
    cols: u32,
    /// Per-edge override values; `None` means all edges are unit weight.
    edge_cost: Option<Vec<Cost>>,
    edge_time: Option<Vec<Time>>,
    cost_cache: RwLock<HashMap<NodeId, Arc<Vec<Cost>>>>,
    time_cache: RwLock<HashMap<NodeId, Arc<Vec<Time>>>>,
}

impl fmt::Debug for GridNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridNetwork")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("uniform", &(self.edge_cost.is_none() && self.edge_time.is_none()))
            .finish()
    }
}

impl Clone for GridNetwork {
    fn clone(&self) -> Self {
        GridNetwork {
            rows: self.rows,
            cols: self.cols,
            edge_cost: self.edge_cost.clone(),
            edge_time: self.edge_time.clone(),
            cost_cache: RwLock::new(HashMap::new()),
            time_cache: RwLock::new(HashMap::new()),
        }
    }
}

impl PartialEq for GridNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.edge_cost == other.edge_cost
            && self.edge_time == other.edge_time
    }
}

/// Builds a `rows x cols` grid with unit cost and time on every arc.
pub fn build_grid(rows: u32, cols: u32) -> Result<GridNetwork, GridError> {
    if rows == 0 || cols == 0 || (rows as u64) * (cols as u64) < 2 {
        return Err(GridError::InvalidDimension { rows, cols });
    }
    Ok(GridNetwork {
        rows,
        cols,
        edge_cost: None,
        edge_time: None,
        cost_cache: RwLock::new(HashMap::new()),
        time_cache: RwLock::new(HashMap::new()),
    })
}

impl GridNetwork {
    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    /// Total node count `rows * cols`.
    pub fn n_nodes(&self) -> u32 {
        self.rows * self.cols
    }

    /// Number of undirected grid edges.
    pub fn n_edges(&self) -> u32 {
        self.rows * (self.cols - 1) + self.cols * (self.rows - 1)
    }

    /// Number of directed arcs (two per edge).
    pub fn n_arcs(&self) -> u32 {
        2 * self.n_edges()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.0 >= 1 && node.0 <= self.n_nodes()
    }

    pub fn check_node(&self, node: NodeId) -> Result<(), GridError> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(GridError::InvalidNode { node: node.0, max: self.n_nodes() })
        }
    }

    /// Node id at 1-based `(row, col)`.
    pub fn node_at(&self, row: u32, col: u32) -> NodeId {
        debug_assert!(row >= 1 && row <= self.rows && col >= 1 && col <= self.cols);
        NodeId((row - 1) * self.cols + col)
    }

    /// 1-based `(row, col)` of a node.
    pub fn coords(&self, node: NodeId) -> (u32, u32) {
        debug_assert!(self.contains(node));
        let z = node.0 - 1;
        (z / self.cols + 1, z % self.cols + 1)
    }

    /// Grid neighbors of a node, in ascending id order.
    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let (r, c) = self.coords(node);
        let up = (r > 1).then(|| self.node_at(r - 1, c));
        let left = (c > 1).then(|| self.node_at(r, c - 1));
        let right = (c < self.cols).then(|| self.node_at(r, c + 1));
        let down = (r < self.rows).then(|| self.node_at(r + 1, c));
        [up, left, right, down].into_iter().flatten()
    }

    /// All directed arcs `(i, j)`, both directions of each edge, ascending.
    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (1..=self.n_nodes())
            .map(NodeId)
            .flat_map(move |i| self.neighbors(i).map(move |j| (i, j)))
    }

    /// True when every arc still carries the default unit cost and time.
    pub fn is_uniform(&self) -> bool {
        self.edge_cost.is_none() && self.edge_time.is_none()
    }

    fn edge_index(&self, a: NodeId, b: NodeId) -> Result<usize, GridError> {
        self.check_node(a)?;
        self.check_node(b)?;
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        let horizontal_edges = self.rows * (self.cols - 1);
        if ra == rb && ca.abs_diff(cb) == 1 {
            let c = ca.min(cb);
            Ok(((ra - 1) * (self.cols - 1) + (c - 1)) as usize)
        } else if ca == cb && ra.abs_diff(rb) == 1 {
            let r = ra.min(rb);
            Ok((horizontal_edges + (r - 1) * self.cols + (ca - 1)) as usize)
        } else {
            Err(GridError::NotAdjacent { a: a.0, b: b.0 })
        }
    }

    /// Overrides the cost of the undirected edge `{a, b}` (both arc directions).
    pub fn set_edge_cost(&mut self, a: NodeId, b: NodeId, cost: Cost) -> Result<(), GridError> {
        let idx = self.edge_index(a, b)?;
        let n_edges = self.n_edges() as usize;
        self.edge_cost.get_or_insert_with(|| vec![1.0; n_edges])[idx] = cost;
        self.cost_cache.write().unwrap().clear();
        Ok(())
    }

    /// Overrides the time of the undirected edge `{a, b}` (both arc directions).
    pub fn set_edge_time(&mut self, a: NodeId, b: NodeId, time: Time) -> Result<(), GridError> {
        let idx = self.edge_index(a, b)?;
        let n_edges = self.n_edges() as usize;
        self.edge_time.get_or_insert_with(|| vec![1.0; n_edges])[idx] = time;
        self.time_cache.write().unwrap().clear();
        Ok(())
    }

    /// Cost of the directed arc `(a, b)`; errors when not adjacent.
    pub fn arc_cost(&self, a: NodeId, b: NodeId) -> Result<Cost, GridError> {
        let idx = self.edge_index(a, b)?;
        Ok(self.edge_cost.as_ref().map_or(1.0, |v| v[idx]))
    }

    /// Time of the directed arc `(a, b)`; errors when not adjacent.
    pub fn arc_time(&self, a: NodeId, b: NodeId) -> Result<Time, GridError> {
        let idx = self.edge_index(a, b)?;
        Ok(self.edge_time.as_ref().map_or(1.0, |v| v[idx]))
    }

    /// Shortest-path length between two nodes under the cost metric.
    ///
    /// On the default unit grid this is the Manhattan distance between the
    /// nodes' coordinates.
    pub fn shortest_dist(&self, a: NodeId, b: NodeId) -> Result<Cost, GridError> {
        self.check_node(a)?;
        self.check_node(b)?;
        Ok(self.dist(a, b))
    }

    /// Shortest-path duration between two nodes under the time metric.
    pub fn shortest_time(&self, a: NodeId, b: NodeId) -> Result<Time, GridError> {
        self.check_node(a)?;
        self.check_node(b)?;
        Ok(self.time(a, b))
    }

    /// All nodes within `range` of `a` under the cost metric, including `a`,
    /// in ascending id order.
    pub fn nodes_within(&self, a: NodeId, range: Cost) -> Result<Vec<NodeId>, GridError> {
        self.check_node(a)?;
        if range < 0.0 {
            return Ok(Vec::new());
        }
        if self.edge_cost.is_none() {
            // Manhattan ball clipped to the grid.
            let (r0, c0) = self.coords(a);
            let radius = range.floor() as i64;
            let mut out = Vec::new();
            for r in 1..=self.rows as i64 {
                let dr = (r - r0 as i64).abs();
                if dr > radius {
                    continue;
                }
                let rem = radius - dr;
                let lo = (c0 as i64 - rem).max(1);
                let hi = (c0 as i64 + rem).min(self.cols as i64);
                for c in lo..=hi {
                    out.push(self.node_at(r as u32, c as u32));
                }
            }
            out.sort_unstable();
            return Ok(out);
        }
        let dists = self.source_map(a, Metric::Cost);
        let mut out: Vec<NodeId> = (1..=self.n_nodes())
            .map(NodeId)
            .filter(|&n| dists[(n.0 - 1) as usize] <= range)
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Maximum shortest-path time over all node pairs. Used for big-M sizing;
    /// intended for desk-scale networks when edges are non-uniform.
    pub fn diameter_time(&self) -> Time {
        if self.edge_time.is_none() {
            return (self.rows - 1) as Time + (self.cols - 1) as Time;
        }
        let mut best: Time = 0.0;
        for i in 1..=self.n_nodes() {
            let d = self.source_map(NodeId(i), Metric::Time);
            for &v in d.iter() {
                if v > best {
                    best = v;
                }
            }
        }
        best
    }

    pub(crate) fn dist(&self, a: NodeId, b: NodeId) -> Cost {
        if self.edge_cost.is_none() {
            return self.manhattan(a, b);
        }
        self.source_map(a, Metric::Cost)[(b.0 - 1) as usize]
    }

    pub(crate) fn time(&self, a: NodeId, b: NodeId) -> Time {
        if self.edge_time.is_none() {
            return self.manhattan(a, b);
        }
        self.source_map(a, Metric::Time)[(b.0 - 1) as usize]
    }

    fn manhattan(&self, a: NodeId, b: NodeId) -> f64 {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        (ra.abs_diff(rb) + ca.abs_diff(cb)) as f64
    }

    fn source_map(&self, src: NodeId, metric: Metric) -> Arc<Vec<f64>> {
        let cache = match metric {
            Metric::Cost => &self.cost_cache,
            Metric::Time => &self.time_cache,
        };
        if let Some(hit) = cache.read().unwrap().get(&src) {
            return Arc::clone(hit);
        }
        let computed = Arc::new(self.dijkstra(src, metric));
        cache
            .write()
            .unwrap()
            .entry(src)
            .or_insert_with(|| Arc::clone(&computed))
            .clone()
    }

    fn dijkstra(&self, src: NodeId, metric: Metric) -> Vec<f64> {
        let n = self.n_nodes() as usize;
        let mut dist = vec![f64::INFINITY; n];
        dist[(src.0 - 1) as usize] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem { dist: 0.0, node: src });
        while let Some(HeapItem { dist: d, node }) = heap.pop() {
            if d > dist[(node.0 - 1) as usize] {
                continue;
            }
            for next in self.neighbors(node) {
                let w = match metric {
                    Metric::Cost => self.arc_cost(node, next).unwrap(),
                    Metric::Time => self.arc_time(node, next).unwrap(),
                };
                let nd = d + w;
                if nd < dist[(next.0 - 1) as usize] {
                    dist[(next.0 - 1) as usize] = nd;
                    heap.push(HeapItem { dist: nd, node: next });
                }
            }
        }
        dist
    }
}

#[derive(Clone, Copy)]
enum Metric {
    Cost,
    Time,
}

struct HeapItem {
    dist: f64,
    node: NodeId,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl Eq for HeapItem {}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties on node id for determinism
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap()
            .then_with(|| other.node.cmp(&self.node))
    }
}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn five_by_five_counts() {
        let g = build_grid(5, 5).unwrap();
        assert_eq!(g.n_nodes(), 25);
        assert_eq!(g.n_edges(), 40);
        assert_eq!(g.n_arcs(), 80);
        assert_eq!(g.arcs().count(), 80);
    }

    #[test]
    fn smallest_grid() {
        let g = build_grid(1, 2).unwrap();
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(g.n_arcs(), 2);
    }

    #[test]
    fn rejects_degenerate_dimensions() {
        assert!(matches!(build_grid(0, 5), Err(GridError::InvalidDimension { .. })));
        assert!(matches!(build_grid(5, 0), Err(GridError::InvalidDimension { .. })));
        assert!(matches!(build_grid(1, 1), Err(GridError::InvalidDimension { .. })));
    }

    #[test]
    fn row_major_numbering() {
        let g = build_grid(5, 5).unwrap();
        assert_eq!(g.node_at(1, 1), NodeId(1));
        assert_eq!(g.node_at(2, 4), NodeId(9));
        assert_eq!(g.coords(NodeId(20)), (4, 5));
        assert_eq!(g.coords(NodeId(13)), (3, 3));
    }

    #[test]
    fn unit_grid_distances() {
        let g = build_grid(5, 5).unwrap();
        // corner-to-corner is the network diameter
        assert_eq!(g.shortest_dist(NodeId(1), NodeId(25)).unwrap(), 8.0);
        assert_eq!(g.shortest_dist(NodeId(1), NodeId(20)).unwrap(), 7.0);
        assert_eq!(g.shortest_dist(NodeId(7), NodeId(19)).unwrap(), 4.0);
        assert_eq!(g.shortest_dist(NodeId(3), NodeId(25)).unwrap(), 6.0);
        assert_eq!(g.shortest_dist(NodeId(2), NodeId(1)).unwrap(), 1.0);
        assert_eq!(g.shortest_dist(NodeId(9), NodeId(3)).unwrap(), 2.0);
        assert_eq!(g.shortest_dist(NodeId(13), NodeId(13)).unwrap(), 0.0);
    }

    #[test]
    fn invalid_node_errors() {
        let g = build_grid(5, 5).unwrap();
        assert!(matches!(
            g.shortest_dist(NodeId(0), NodeId(1)),
            Err(GridError::InvalidNode { node: 0, .. })
        ));
        assert!(matches!(
            g.shortest_dist(NodeId(1), NodeId(26)),
            Err(GridError::InvalidNode { node: 26, .. })
        ));
        assert!(g.nodes_within(NodeId(99), 1.0).is_err());
    }

    #[test]
    fn manhattan_ball_sizes() {
        let g = build_grid(5, 5).unwrap();
        assert_eq!(g.nodes_within(NodeId(13), 0.0).unwrap(), vec![NodeId(13)]);
        assert_eq!(g.nodes_within(NodeId(13), 2.0).unwrap().len(), 13);
        for n in 1..=25 {
            assert_eq!(g.nodes_within(NodeId(n), 8.0).unwrap().len(), 25);
        }
    }

    #[test]
    fn ball_contains_center_and_matches_filter() {
        let g = build_grid(4, 7).unwrap();
        for n in (1..=28).map(NodeId) {
            for range in [0.0, 1.0, 3.0, 9.0] {
                let ball = g.nodes_within(n, range).unwrap();
                assert!(ball.contains(&n));
                let expect: Vec<NodeId> = (1..=28)
                    .map(NodeId)
                    .filter(|&m| g.dist(n, m) <= range)
                    .collect();
                assert_eq!(ball, expect);
            }
        }
    }

    #[test]
    fn non_unit_edges_use_dijkstra() {
        let mut g = build_grid(2, 2).unwrap();
        // make the direct edge 1-2 expensive; detour 1-3-4-2 wins
        g.set_edge_cost(NodeId(1), NodeId(2), 10.0).unwrap();
        assert_eq!(g.shortest_dist(NodeId(1), NodeId(2)).unwrap(), 3.0);
        // time metric is untouched
        assert_eq!(g.shortest_time(NodeId(1), NodeId(2)).unwrap(), 1.0);
        g.set_edge_time(NodeId(3), NodeId(4), 0.5).unwrap();
        assert_eq!(g.shortest_time(NodeId(1), NodeId(4)).unwrap(), 1.5);
    }

    #[test]
    fn cache_invalidated_on_edit() {
        let mut g = build_grid(3, 3).unwrap();
        g.set_edge_cost(NodeId(1), NodeId(2), 5.0).unwrap();
        assert_eq!(g.shortest_dist(NodeId(1), NodeId(2)).unwrap(), 3.0);
        g.set_edge_cost(NodeId(1), NodeId(2), 1.0).unwrap();
        assert_eq!(g.shortest_dist(NodeId(1), NodeId(2)).unwrap(), 1.0);
    }

    #[test]
    fn diameter_of_unit_grid() {
        assert_eq!(build_grid(5, 5).unwrap().diameter_time(), 8.0);
        assert_eq!(build_grid(2, 9).unwrap().diameter_time(), 9.0);
    }

    proptest! {
        #[test]
        fn closed_form_matches_dijkstra(rows in 1u32..6, cols in 2u32..6, a in 0u32..30, b in 0u32..30) {
            let g = build_grid(rows, cols).unwrap();
            let n = g.n_nodes();
            let a = NodeId(a % n + 1);
            let b = NodeId(b % n + 1);
            let closed = g.dist(a, b);
            let general = g.dijkstra(a, Metric::Cost)[(b.0 - 1) as usize];
            prop_assert_eq!(closed, general);
        }

        #[test]
        fn symmetry_and_triangle(a in 0u32..25, b in 0u32..25, c in 0u32..25) {
            let g = build_grid(5, 5).unwrap();
            let (a, b, c) = (NodeId(a % 25 + 1), NodeId(b % 25 + 1), NodeId(c % 25 + 1));
            prop_assert_eq!(g.dist(a, b), g.dist(b, a));
            prop_assert!(g.dist(a, c) <= g.dist(a, b) + g.dist(b, c));
        }

        #[test]
        fn ball_monotone_in_range(node in 0u32..25, r1 in 0u32..9, r2 in 0u32..9) {
            let g = build_grid(5, 5).unwrap();
            let node = NodeId(node % 25 + 1);
            let (lo, hi) = (r1.min(r2) as f64, r1.max(r2) as f64);
            let small = g.nodes_within(node, lo).unwrap();
            let big = g.nodes_within(node, hi).unwrap();
            prop_assert!(small.iter().all(|n| big.contains(n)));
        }
    }
}
