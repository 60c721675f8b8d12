use std::collections::BTreeMap;

use crate::ring::NodeId;

use super::co_located;

/// A maximal co-location of `members` on `node` over `[start_round, end_round]`.
///
/// When a robot joins or leaves an existing tower the record is closed and a
/// new one opens with the new member set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerRecord {
    pub node: NodeId,
    pub members: Vec<usize>,
    pub start_round: u64,
    pub end_round: u64,
}

#[derive(Clone, Debug, Default)]
pub struct TowerTracker {
    open: BTreeMap<NodeId, (Vec<usize>, u64)>,
    last_round: u64,
}

impl TowerTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds the positions of configuration `round`; returns records that closed.
    pub fn observe(&mut self, round: u64, positions: &[NodeId]) -> Vec<TowerRecord> {
        let now = co_located(positions);
        let mut closed = Vec::new();
        let open = std::mem::take(&mut self.open);
        for (node, (members, start)) in open {
            if now.get(&node) == Some(&members) {
                self.open.insert(node, (members, start));
            } else {
                closed.push(TowerRecord {
                    node,
                    members,
                    start_round: start,
                    end_round: round.saturating_sub(1),
                });
            }
        }
        for (node, members) in now {
            self.open.entry(node).or_insert((members, round));
        }
        self.last_round = round;
        closed
    }

    pub fn open_towers(&self) -> impl Iterator<Item = (NodeId, &[usize], u64)> {
        self.open.iter().map(|(n, (m, s))| (*n, m.as_slice(), *s))
    }

    /// Closes every open tower at the last observed round.
    pub fn finish(&mut self) -> Vec<TowerRecord> {
        let last = self.last_round;
        std::mem::take(&mut self.open)
            .into_iter()
            .map(|(node, (members, start))| TowerRecord {
                node,
                members,
                start_round: start,
                end_round: last,
            })
            .collect()
    }
}
