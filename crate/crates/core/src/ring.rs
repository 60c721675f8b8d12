//! Static ring topology: node and edge indexing, ports, distances.
//!
//! Global clockwise (CW) is increasing node index modulo `n`. Edge `i` joins
//! node `i` and node `(i + 1) mod n`, so the CW port of node `u` binds edge
//! `u` and its CCW port binds edge `(u - 1) mod n`. A ring of two nodes is
//! either a single edge (simple) or two parallel edges (multigraph).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Orientation as seen by an external observer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GlobalDirection {
    Cw,
    Ccw,
}

impl GlobalDirection {
    pub fn opposite(self) -> Self {
        match self {
            GlobalDirection::Cw => GlobalDirection::Ccw,
            GlobalDirection::Ccw => GlobalDirection::Cw,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GlobalDirection::Cw => "CW",
            GlobalDirection::Ccw => "CCW",
        }
    }
}

impl fmt::Display for GlobalDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingSpec {
    n: usize,
    size2_multigraph: bool,
}

impl RingSpec {
    pub fn new(n: usize) -> Result<Self, Error> {
        Self::with_multigraph(n, false)
    }

    /// `size2_multigraph` selects two parallel edges when `n == 2` and is
    /// ignored otherwise.
    pub fn with_multigraph(n: usize, size2_multigraph: bool) -> Result<Self, Error> {
        if n < 2 {
            return Err(Error::RingTooSmall(n));
        }
        Ok(RingSpec {
            n,
            size2_multigraph: n == 2 && size2_multigraph,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_multigraph(&self) -> bool {
        self.size2_multigraph
    }

    pub fn edge_count(&self) -> usize {
        if self.n == 2 && !self.size2_multigraph {
            1
        } else {
            self.n
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n).map(NodeId)
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edge_count()).map(EdgeId)
    }

    pub fn contains_node(&self, u: NodeId) -> bool {
        u.0 < self.n
    }

    pub fn contains_edge(&self, e: EdgeId) -> bool {
        e.0 < self.edge_count()
    }

    pub fn neighbor(&self, u: NodeId, g: GlobalDirection) -> NodeId {
        debug_assert!(self.contains_node(u));
        match g {
            GlobalDirection::Cw => NodeId((u.0 + 1) % self.n),
            GlobalDirection::Ccw => NodeId((u.0 + self.n - 1) % self.n),
        }
    }

    /// The `(cw, ccw)` port bindings of `u`.
    pub fn adjacent_edges(&self, u: NodeId) -> (EdgeId, EdgeId) {
        (
            self.port_edge(u, GlobalDirection::Cw),
            self.port_edge(u, GlobalDirection::Ccw),
        )
    }

    pub fn port_edge(&self, u: NodeId, g: GlobalDirection) -> EdgeId {
        debug_assert!(self.contains_node(u));
        if self.edge_count() == 1 {
            return EdgeId(0);
        }
        match g {
            GlobalDirection::Cw => EdgeId(u.0),
            GlobalDirection::Ccw => EdgeId((u.0 + self.n - 1) % self.n),
        }
    }

    /// The two extremities of `e`, lower-index end first.
    pub fn endpoints(&self, e: EdgeId) -> (NodeId, NodeId) {
        debug_assert!(self.contains_edge(e));
        if self.n == 2 {
            return (NodeId(0), NodeId(1));
        }
        (NodeId(e.0), NodeId((e.0 + 1) % self.n))
    }

    pub fn distance(&self, u: NodeId, v: NodeId) -> usize {
        let forward = (v.0 + self.n - u.0) % self.n;
        let backward = (u.0 + self.n - v.0) % self.n;
        forward.min(backward)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ring(n: usize) -> RingSpec {
        RingSpec::new(n).unwrap()
    }

    #[test]
    fn rejects_degenerate_rings() {
        assert!(RingSpec::new(0).is_err());
        assert!(RingSpec::new(1).is_err());
    }

    #[test]
    fn neighbor_wraps_around() {
        assert_eq!(ring(4).neighbor(NodeId(3), GlobalDirection::Cw), NodeId(0));
        assert_eq!(ring(4).neighbor(NodeId(0), GlobalDirection::Ccw), NodeId(3));
        assert_eq!(ring(2).neighbor(NodeId(0), GlobalDirection::Cw), NodeId(1));
    }

    #[test]
    fn adjacent_edge_conventions() {
        assert_eq!(ring(5).adjacent_edges(NodeId(0)), (EdgeId(0), EdgeId(4)));
        let multi = RingSpec::with_multigraph(2, true).unwrap();
        assert_eq!(multi.edge_count(), 2);
        assert_eq!(multi.adjacent_edges(NodeId(1)), (EdgeId(1), EdgeId(0)));
        assert_eq!(multi.adjacent_edges(NodeId(0)), (EdgeId(0), EdgeId(1)));
        let simple = ring(2);
        assert_eq!(simple.edge_count(), 1);
        assert_eq!(simple.adjacent_edges(NodeId(0)), (EdgeId(0), EdgeId(0)));
    }

    #[test]
    fn multigraph_flag_ignored_above_two() {
        let r = RingSpec::with_multigraph(5, true).unwrap();
        assert!(!r.is_multigraph());
        assert_eq!(r.edge_count(), 5);
    }

    // Arc lengths enumerated by walking CW from u until v.
    fn arc_oracle(n: usize, u: usize, v: usize) -> usize {
        let mut steps = 0;
        let mut cur = u;
        while cur != v {
            cur = (cur + 1) % n;
            steps += 1;
        }
        steps.min((n - steps) % n)
    }

    #[test]
    fn distance_examples() {
        assert_eq!(arc_oracle(8, 1, 6), 3);
        assert_eq!(ring(8).distance(NodeId(1), NodeId(6)), 3);
        assert_eq!(ring(4).distance(NodeId(2), NodeId(2)), 0);
        assert_eq!(arc_oracle(3, 0, 2), 1);
        assert_eq!(ring(3).distance(NodeId(0), NodeId(2)), 1);
    }

    proptest! {
        #[test]
        fn neighbor_round_trips(n in 2usize..40, u in 0usize..40, cw in any::<bool>()) {
            let r = ring(n);
            let u = NodeId(u % n);
            let g = if cw { GlobalDirection::Cw } else { GlobalDirection::Ccw };
            prop_assert_eq!(r.neighbor(r.neighbor(u, g), g.opposite()), u);
        }

        #[test]
        fn cw_edge_is_next_nodes_ccw_edge(n in 3usize..40, u in 0usize..40) {
            let r = ring(n);
            let u = NodeId(u % n);
            let next = r.neighbor(u, GlobalDirection::Cw);
            prop_assert_eq!(r.adjacent_edges(u).0, r.adjacent_edges(next).1);
        }

        #[test]
        fn distance_symmetric_and_bounded(n in 2usize..40, u in 0usize..40, v in 0usize..40) {
            let r = ring(n);
            let (u, v) = (NodeId(u % n), NodeId(v % n));
            prop_assert_eq!(r.distance(u, v), r.distance(v, u));
            prop_assert!(r.distance(u, v) <= n / 2);
            prop_assert_eq!(r.distance(u, v), arc_oracle(n, u.0, v.0));
        }

        #[test]
        fn port_edge_joins_node_and_neighbor(n in 2usize..40, u in 0usize..40, cw in any::<bool>(), multi in any::<bool>()) {
            let r = RingSpec::with_multigraph(n, multi).unwrap();
            let u = NodeId(u % n);
            let g = if cw { GlobalDirection::Cw } else { GlobalDirection::Ccw };
            let (a, b) = r.endpoints(r.port_edge(u, g));
            let v = r.neighbor(u, g);
            prop_assert!((a == u && b == v) || (a == v && b == u));
        }
    }
}
