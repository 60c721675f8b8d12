use std::collections::BTreeSet;

use crate::engine::{co_located, Configuration, RoundRecord};
use crate::ring::{EdgeId, GlobalDirection, NodeId, RingSpec};
use crate::robots::Algorithm;

use super::{InvariantReport, Monitor};

fn fmt_positions(positions: &[NodeId]) -> String {
    let parts: Vec<String> = positions.iter().map(|p| p.0.to_string()).collect();
    format!("[{}]", parts.join(","))
}

#[derive(Clone, Debug, Default)]
pub struct MaxTowerMonitor {
    violation: Option<(u64, String)>,
}

impl MaxTowerMonitor {
    pub const NAME: &'static str = "max_tower";

    pub fn new() -> Self {
        Self::default()
    }

    fn check(&mut self, round: u64, positions: &[NodeId]) {
        if self.violation.is_some() {
            return;
        }
        if let Some((node, members)) = co_located(positions).into_iter().find(|(_, m)| m.len() > 2)
        {
            self.violation = Some((
                round,
                format!(
                    "node {} hosts robots {:?} at {}",
                    node,
                    members,
                    fmt_positions(positions)
                ),
            ));
        }
    }

    pub fn report(&self) -> InvariantReport {
        match &self.violation {
            Some((round, w)) => InvariantReport::fail(Self::NAME, *round, w.clone()),
            None => InvariantReport::pass(Self::NAME),
        }
    }
}

impl Monitor for MaxTowerMonitor {
    fn start(&mut self, _ring: &RingSpec, initial: &Configuration) {
        self.check(initial.round, &initial.positions);
    }

    fn round(&mut self, _ring: &RingSpec, record: &RoundRecord, after: &[NodeId]) {
        self.check(record.round + 1, after);
    }
}

#[derive(Clone, Debug, Default)]
pub struct OppositeDirsMonitor {
    violation: Option<(u64, String)>,
}

impl OppositeDirsMonitor {
    pub const NAME: &'static str = "opposite_dirs";

    pub fn new() -> Self {
        Self::default()
    }

    pub fn report(&self) -> InvariantReport {
        match &self.violation {
            Some((round, w)) => InvariantReport::fail(Self::NAME, *round, w.clone()),
            None => InvariantReport::pass(Self::NAME),
        }
    }
}

impl Monitor for OppositeDirsMonitor {
    fn round(&mut self, _ring: &RingSpec, record: &RoundRecord, _after: &[NodeId]) {
        if self.violation.is_some() {
            return;
        }
        for (node, members) in co_located(&record.positions) {
            if let [a, b] = members[..] {
                let (da, db) = (record.states[a].global_dir(), record.states[b].global_dir());
                if da == db {
                    self.violation = Some((
                        record.round,
                        format!("robots {a} and {b} on node {node} both head {da}"),
                    ));
                    return;
                }
            }
        }
    }
}

/// Direction changes allowed only for robots that share their node.
#[derive(Clone, Debug, Default)]
pub struct DirectionChangeMonitor {
    dirs: Vec<GlobalDirection>,
    violation: Option<(u64, String)>,
}

impl DirectionChangeMonitor {
    pub const NAME: &'static str = "dir_changes_only_in_towers";

    pub fn new() -> Self {
        Self::default()
    }

    pub fn report(&self) -> InvariantReport {
        match &self.violation {
            Some((round, w)) => InvariantReport::fail(Self::NAME, *round, w.clone()),
            None => InvariantReport::pass(Self::NAME),
        }
    }
}

impl Monitor for DirectionChangeMonitor {
    fn start(&mut self, _ring: &RingSpec, initial: &Configuration) {
        self.dirs = initial.states.iter().map(|s| s.global_dir()).collect();
    }

    fn round(&mut self, _ring: &RingSpec, record: &RoundRecord, _after: &[NodeId]) {
        if self.dirs.len() != record.states.len() {
            self.dirs = record.states.iter().map(|s| s.global_dir()).collect();
            return;
        }
        let towers = co_located(&record.positions);
        let in_tower: BTreeSet<usize> = towers.values().flatten().copied().collect();
        for (i, s) in record.states.iter().enumerate() {
            let now = s.global_dir();
            if now != self.dirs[i] && !in_tower.contains(&i) && self.violation.is_none() {
                self.violation = Some((
                    record.round,
                    format!(
                        "robot {i} turned to {now} alone on node {}",
                        record.positions[i]
                    ),
                ));
            }
            self.dirs[i] = now;
        }
    }
}

/// PEF_3+ bookkeeping: the flag written by Compute equals the actual move.
#[derive(Clone, Debug, Default)]
pub struct MovedFlagMonitor {
    violation: Option<(u64, String)>,
}

impl MovedFlagMonitor {
    pub const NAME: &'static str = "moved_flag";

    pub fn new() -> Self {
        Self::default()
    }

    pub fn report(&self) -> InvariantReport {
        match &self.violation {
            Some((round, w)) => InvariantReport::fail(Self::NAME, *round, w.clone()),
            None => InvariantReport::pass(Self::NAME),
        }
    }
}

impl Monitor for MovedFlagMonitor {
    fn round(&mut self, _ring: &RingSpec, record: &RoundRecord, _after: &[NodeId]) {
        if self.violation.is_some() {
            return;
        }
        for (i, (s, moved)) in record.states.iter().zip(&record.moved).enumerate() {
            if s.algorithm == Algorithm::Pef3Plus && s.has_moved_previous_step != *moved {
                self.violation = Some((
                    record.round,
                    format!(
                        "robot {i}: flag {} but moved={moved}",
                        s.has_moved_previous_step
                    ),
                ));
                return;
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct MoveLegalityMonitor {
    violation: Option<(u64, String)>,
}

impl MoveLegalityMonitor {
    pub const NAME: &'static str = "move_legality";

    pub fn new() -> Self {
        Self::default()
    }

    pub fn report(&self) -> InvariantReport {
        match &self.violation {
            Some((round, w)) => InvariantReport::fail(Self::NAME, *round, w.clone()),
            None => InvariantReport::pass(Self::NAME),
        }
    }
}

impl Monitor for MoveLegalityMonitor {
    fn round(&mut self, ring: &RingSpec, record: &RoundRecord, after: &[NodeId]) {
        if self.violation.is_some() {
            return;
        }
        for (i, ((p, s), q)) in record
            .positions
            .iter()
            .zip(&record.states)
            .zip(after)
            .enumerate()
        {
            let g = s.global_dir();
            let open = record.edges.contains(ring.port_edge(*p, g));
            let expected = if open { ring.neighbor(*p, g) } else { *p };
            if *q != expected || record.moved[i] != open {
                self.violation = Some((
                    record.round,
                    format!("robot {i} went {p} -> {q} heading {g}, edge open={open}"),
                ));
                return;
            }
        }
    }
}

/// Sentinel formation at the extremities of an eventually missing edge.
///
/// Once both extremities host a robot pointing at the edge after it has
/// disappeared, neither sentinel can move or turn again, so a later break is
/// reported as a failure. Formation itself can only be witnessed.
#[derive(Clone, Debug)]
pub struct SentinelMonitor {
    edge: EdgeId,
    t_remove: u64,
    tail: u64,
    rounds: u64,
    formed_since: Option<u64>,
    broken: Option<(u64, String)>,
}

impl SentinelMonitor {
    pub const NAME: &'static str = "sentinels";

    pub fn new(edge: EdgeId, t_remove: u64, tail: u64) -> Self {
        SentinelMonitor {
            edge,
            t_remove,
            tail,
            rounds: 0,
            formed_since: None,
            broken: None,
        }
    }

    /// First round of the stable sentinel run, if one is in progress.
    pub fn formed_since(&self) -> Option<u64> {
        self.formed_since
    }

    fn guarded(ring: &RingSpec, record: &RoundRecord, node: NodeId, edge: EdgeId) -> bool {
        record
            .positions
            .iter()
            .zip(&record.states)
            .any(|(p, s)| *p == node && ring.port_edge(node, s.global_dir()) == edge)
    }

    pub fn report(&self) -> InvariantReport {
        if let Some((round, w)) = &self.broken {
            return InvariantReport::fail(Self::NAME, *round, w.clone());
        }
        if self.t_remove >= self.rounds {
            return InvariantReport::inconclusive(
                Self::NAME,
                format!(
                    "edge {} never missing within {} rounds",
                    self.edge, self.rounds
                ),
            );
        }
        match self.formed_since {
            Some(t) if t + self.tail <= self.rounds => {
                let mut r = InvariantReport::pass(Self::NAME);
                r.witness = format!("sentinels stable from round {t}");
                r
            }
            Some(t) => InvariantReport::inconclusive(
                Self::NAME,
                format!(
                    "sentinels formed at round {t}, fewer than {} rounds before the end",
                    self.tail
                ),
            ),
            None => InvariantReport::inconclusive(Self::NAME, "sentinels not yet formed".into()),
        }
    }
}

impl Monitor for SentinelMonitor {
    fn round(&mut self, ring: &RingSpec, record: &RoundRecord, _after: &[NodeId]) {
        self.rounds = self.rounds.max(record.round + 1);
        if record.round < self.t_remove || self.broken.is_some() {
            return;
        }
        let (a, b) = ring.endpoints(self.edge);
        let holds =
            Self::guarded(ring, record, a, self.edge) && Self::guarded(ring, record, b, self.edge);
        match (holds, self.formed_since) {
            (true, None) => self.formed_since = Some(record.round),
            (false, Some(since)) => {
                self.broken = Some((
                    record.round,
                    format!(
                        "sentinels formed at round {since} left edge {} at {}",
                        self.edge,
                        fmt_positions(&record.positions)
                    ),
                ));
                self.formed_since = None;
            }
            _ => {}
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConfinementMonitor {
    allowed: BTreeSet<NodeId>,
    visited: BTreeSet<NodeId>,
    violation: Option<(u64, String)>,
}

impl ConfinementMonitor {
    pub const NAME: &'static str = "confinement";

    pub fn new(allowed: &[NodeId]) -> Self {
        ConfinementMonitor {
            allowed: allowed.iter().copied().collect(),
            visited: BTreeSet::new(),
            violation: None,
        }
    }

    pub fn visited(&self) -> &BTreeSet<NodeId> {
        &self.visited
    }

    fn visit(&mut self, time: u64, positions: &[NodeId]) {
        for p in positions {
            self.visited.insert(*p);
            if self.violation.is_none() && !self.allowed.contains(p) {
                self.violation = Some((
                    time,
                    format!("node {p} reached at {}", fmt_positions(positions)),
                ));
            }
        }
    }

    pub fn report(&self) -> InvariantReport {
        match &self.violation {
            Some((round, w)) => InvariantReport::fail(Self::NAME, *round, w.clone()),
            None => {
                let mut r = InvariantReport::pass(Self::NAME);
                let nodes: Vec<NodeId> = self.visited.iter().copied().collect();
                r.witness = format!("visited {}", fmt_positions(&nodes));
                r
            }
        }
    }
}

impl Monitor for ConfinementMonitor {
    fn start(&mut self, _ring: &RingSpec, initial: &Configuration) {
        self.visit(initial.round, &initial.positions);
    }

    fn round(&mut self, _ring: &RingSpec, record: &RoundRecord, after: &[NodeId]) {
        self.visit(record.round + 1, after);
    }
}
