use bitvec::prelude::*;

use crate::engine::{Configuration, RoundRecord};
use crate::ring::{NodeId, RingSpec};

use super::Monitor;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeCoverage {
    /// Configurations in which the node hosts at least one robot.
    pub visits: u64,
    pub last_visit: Option<u64>,
    /// Longest run of consecutive configurations without a robot on the
    /// node, counting the runs before the first and after the last visit.
    pub max_gap: u64,
}

/// Perpetual-coverage proxy at a finite horizon.
///
/// A visit is a robot on the node at a round boundary. An epoch completes
/// each time every node has been visited since the previous completion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverageStats {
    pub nodes: Vec<NodeCoverage>,
    pub epochs_completed: u64,
    /// Round at whose end (or, for round 0, start) every node had been visited.
    pub first_full_coverage_round: Option<u64>,
    /// Index of the last configuration observed.
    pub last_time: u64,
}

impl CoverageStats {
    pub fn max_gap(&self) -> u64 {
        self.nodes.iter().map(|n| n.max_gap).max().unwrap_or(0)
    }

    pub fn visited_nodes(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.visits > 0)
            .map(|(i, _)| NodeId(i))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct CoverageMonitor {
    nodes: Vec<NodeCoverage>,
    epoch: BitVec,
    epochs: u64,
    first_full: Option<u64>,
    last_time: u64,
}

impl CoverageMonitor {
    pub fn new(ring: &RingSpec) -> Self {
        CoverageMonitor {
            nodes: vec![NodeCoverage::default(); ring.n()],
            epoch: bitvec![0; ring.n()],
            epochs: 0,
            first_full: None,
            last_time: 0,
        }
    }

    fn visit(&mut self, time: u64, positions: &[NodeId]) {
        self.last_time = time;
        for p in positions {
            let c = &mut self.nodes[p.0];
            if c.last_visit == Some(time) {
                continue;
            }
            let gap = match c.last_visit {
                Some(last) => time - last - 1,
                None => time,
            };
            c.max_gap = c.max_gap.max(gap);
            c.last_visit = Some(time);
            c.visits += 1;
            self.epoch.set(p.0, true);
        }
        if self.epoch.all() {
            self.epochs += 1;
            self.epoch.fill(false);
            self.first_full.get_or_insert(time.saturating_sub(1));
        }
    }

    pub fn stats(&self) -> CoverageStats {
        let nodes = self
            .nodes
            .iter()
            .map(|c| {
                let trailing = match c.last_visit {
                    Some(last) => self.last_time - last,
                    None => self.last_time + 1,
                };
                NodeCoverage {
                    max_gap: c.max_gap.max(trailing),
                    ..c.clone()
                }
            })
            .collect();
        CoverageStats {
            nodes,
            epochs_completed: self.epochs,
            first_full_coverage_round: self.first_full,
            last_time: self.last_time,
        }
    }
}

impl Monitor for CoverageMonitor {
    fn start(&mut self, _ring: &RingSpec, initial: &Configuration) {
        self.visit(initial.round, &initial.positions);
    }

    fn round(&mut self, _ring: &RingSpec, record: &RoundRecord, after: &[NodeId]) {
        self.visit(record.round + 1, after);
    }
}
