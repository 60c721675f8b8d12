//! The fully synchronous round loop.
//!
//! Round `t` takes `(G_t, γ_t)` to `γ_{t+1}`: every robot looks at `E_t` and
//! at its own node in `γ_t`, computes, then all robots move at once over the
//! edge behind their post-Compute direction if it is in `E_t`. Two robots
//! crossing the same edge in opposite directions simply swap nodes.

mod tower;
mod trace;

pub use tower::{TowerRecord, TowerTracker};
pub use trace::{format_trace_line, run, run_with, ExecutionTrace, RunOptions};

use std::collections::BTreeMap;

use crate::dynamics::EdgeSet;
use crate::error::{Error, Result};
use crate::ring::{GlobalDirection, NodeId, RingSpec};
use crate::robots::{Algorithm, Chirality, RobotState, View};

/// Positions and states of all robots at the start of `round`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub positions: Vec<NodeId>,
    pub states: Vec<RobotState>,
    pub round: u64,
}

impl Configuration {
    pub fn robot_count(&self) -> usize {
        self.positions.len()
    }

    /// Exact occupancy per node. Analysis only: robots never see counts.
    pub fn occupancy(&self, ring: &RingSpec) -> Vec<u32> {
        occupancy(ring, &self.positions)
    }
}

pub(crate) fn occupancy(ring: &RingSpec, positions: &[NodeId]) -> Vec<u32> {
    let mut counts = vec![0u32; ring.n()];
    for p in positions {
        counts[p.0] += 1;
    }
    counts
}

/// Nodes hosting more than one robot, with the sorted robot indices on each.
pub(crate) fn co_located(positions: &[NodeId]) -> BTreeMap<NodeId, Vec<usize>> {
    let mut by_node: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (i, p) in positions.iter().enumerate() {
        by_node.entry(*p).or_default().push(i);
    }
    by_node.retain(|_, members| members.len() > 1);
    by_node
}

/// Builds a well-initiated configuration at round 0.
pub fn init(
    ring: &RingSpec,
    positions: &[NodeId],
    chiralities: &[Chirality],
    algorithm: Algorithm,
) -> Result<Configuration> {
    let k = positions.len();
    if k == 0 {
        return Err(Error::NoRobots);
    }
    if k >= ring.n() {
        return Err(Error::TooManyRobots { k, n: ring.n() });
    }
    if chiralities.len() != k {
        return Err(Error::CountMismatch {
            what: "chiralities",
            expected: k,
            got: chiralities.len(),
        });
    }
    for p in positions {
        if !ring.contains_node(*p) {
            return Err(Error::NodeOutOfRange {
                node: *p,
                n: ring.n(),
            });
        }
    }
    if let Some((node, _)) = co_located(positions).into_iter().next() {
        return Err(Error::DuplicatePosition(node));
    }
    if algorithm == Algorithm::Pef2 && (k, ring.n()) != (2, 3) {
        log::warn!(
            "pef2 is designed for k=2 on n=3, running with k={k} on n={}",
            ring.n()
        );
    }
    if algorithm == Algorithm::Pef1 && (k, ring.n()) != (1, 2) {
        log::warn!(
            "pef1 is designed for k=1 on n=2, running with k={k} on n={}",
            ring.n()
        );
    }
    if algorithm == Algorithm::Pef3Plus && k < 3 {
        log::warn!("pef3plus needs k >= 3 for exploration, running with k={k}");
    }
    Ok(Configuration {
        positions: positions.to_vec(),
        states: chiralities
            .iter()
            .map(|c| RobotState::initial(algorithm, *c))
            .collect(),
        round: 0,
    })
}

/// What happened to every robot during one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u64,
    pub edges: EdgeSet,
    /// Positions at the start of the round (`γ_t`).
    pub positions: Vec<NodeId>,
    /// States after Compute; their `dir` is the one used by Move.
    pub states: Vec<RobotState>,
    pub moved: Vec<bool>,
}

impl RoundRecord {
    pub fn global_dirs(&self) -> impl Iterator<Item = GlobalDirection> + '_ {
        self.states.iter().map(RobotState::global_dir)
    }
}

pub struct StepOutcome {
    pub next: Configuration,
    pub record: RoundRecord,
}

fn look(ring: &RingSpec, pos: NodeId, state: &RobotState, edges: &EdgeSet, count: u32) -> View {
    let g = state.global_dir();
    View {
        exists_edge_dir: edges.contains(ring.port_edge(pos, g)),
        exists_edge_opp: edges.contains(ring.port_edge(pos, g.opposite())),
        others_on_node: count > 1,
    }
}

/// One synchronous Look-Compute-Move round over `E_t = edges`.
pub fn step(ring: &RingSpec, config: &Configuration, edges: &EdgeSet) -> StepOutcome {
    let counts = config.occupancy(ring);
    let views: Vec<View> = config
        .positions
        .iter()
        .zip(&config.states)
        .map(|(p, s)| look(ring, *p, s, edges, counts[p.0]))
        .collect();
    let states: Vec<RobotState> = config
        .states
        .iter()
        .zip(&views)
        .map(|(s, v)| s.compute(*v))
        .collect();
    let mut moved = Vec::with_capacity(states.len());
    let mut next_positions = Vec::with_capacity(states.len());
    for (p, s) in config.positions.iter().zip(&states) {
        let g = s.global_dir();
        let go = edges.contains(ring.port_edge(*p, g));
        moved.push(go);
        next_positions.push(if go { ring.neighbor(*p, g) } else { *p });
    }
    StepOutcome {
        next: Configuration {
            positions: next_positions,
            states: states.clone(),
            round: config.round + 1,
        },
        record: RoundRecord {
            round: config.round,
            edges: edges.clone(),
            positions: config.positions.clone(),
            states,
            moved,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robots::LocalDirection;

    fn nodes(v: &[usize]) -> Vec<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    #[test]
    fn init_accepts_towerless_start() {
        let ring = RingSpec::new(4).unwrap();
        let c = init(
            &ring,
            &nodes(&[0, 1, 2]),
            &[Chirality::RIGHT_IS_CW; 3],
            Algorithm::Pef3Plus,
        )
        .unwrap();
        assert_eq!(c.round, 0);
        assert!(c
            .states
            .iter()
            .all(|s| s.dir == LocalDirection::Left && !s.has_moved_previous_step));
    }

    #[test]
    fn init_rejects_ill_formed_starts() {
        let ring = RingSpec::new(4).unwrap();
        let cw = Chirality::RIGHT_IS_CW;
        assert!(matches!(
            init(&ring, &nodes(&[0, 1, 2, 3]), &[cw; 4], Algorithm::Pef3Plus),
            Err(Error::TooManyRobots { k: 4, n: 4 })
        ));
        assert!(matches!(
            init(&ring, &nodes(&[1, 1]), &[cw; 2], Algorithm::Pef3Plus),
            Err(Error::DuplicatePosition(NodeId(1)))
        ));
        assert!(matches!(
            init(&ring, &[], &[], Algorithm::Pef3Plus),
            Err(Error::NoRobots)
        ));
        assert!(init(&ring, &nodes(&[7]), &[cw], Algorithm::Pef1).is_err());
        assert!(init(&ring, &nodes(&[0, 2]), &[cw], Algorithm::Pef2).is_err());
        // Mismatched sizes are allowed for impossibility experiments.
        assert!(init(&ring, &nodes(&[0, 2]), &[cw; 2], Algorithm::Pef2).is_ok());
    }

    #[test]
    fn static_round_moves_everyone_ccw() {
        let ring = RingSpec::new(4).unwrap();
        let c = init(
            &ring,
            &nodes(&[0, 1, 2]),
            &[Chirality::RIGHT_IS_CW; 3],
            Algorithm::Pef3Plus,
        )
        .unwrap();
        let out = step(&ring, &c, &EdgeSet::full(&ring));
        assert_eq!(out.next.positions, nodes(&[3, 0, 1]));
        assert_eq!(out.record.moved, vec![true; 3]);
        assert_eq!(out.next.round, 1);
    }

    #[test]
    fn no_edges_no_moves() {
        let ring = RingSpec::new(5).unwrap();
        let c = init(
            &ring,
            &nodes(&[0, 2, 4]),
            &[Chirality::RIGHT_IS_CCW; 3],
            Algorithm::Pef3Plus,
        )
        .unwrap();
        let out = step(&ring, &c, &EdgeSet::empty(&ring));
        assert_eq!(out.next.positions, c.positions);
        assert_eq!(out.record.moved, vec![false; 3]);
    }

    #[test]
    fn opposite_crossings_swap_without_meeting() {
        let ring = RingSpec::new(4).unwrap();
        let c = init(
            &ring,
            &nodes(&[0, 1]),
            &[Chirality::RIGHT_IS_CCW, Chirality::RIGHT_IS_CW],
            Algorithm::Pef3Plus,
        )
        .unwrap();
        let out = step(&ring, &c, &EdgeSet::full(&ring));
        assert_eq!(out.next.positions, nodes(&[1, 0]));
        assert!(co_located(&out.next.positions).is_empty());
    }

    #[test]
    fn tower_forms_then_members_split() {
        // r0 at 0 heads CW over edge 0; r1 at 1 heads CW into absent edge 1.
        let ring = RingSpec::new(4).unwrap();
        let c = init(
            &ring,
            &nodes(&[0, 1]),
            &[Chirality::RIGHT_IS_CCW; 2],
            Algorithm::Pef3Plus,
        )
        .unwrap();
        let first = EdgeSet::from_present(&ring, [0, 2, 3].map(crate::ring::EdgeId)).unwrap();
        let out = step(&ring, &c, &first);
        assert_eq!(out.next.positions, nodes(&[1, 1]));
        assert_eq!(out.record.moved, vec![true, false]);

        let out = step(&ring, &out.next, &EdgeSet::full(&ring));
        assert_eq!(out.record.states[0].dir, LocalDirection::Right);
        assert_eq!(out.record.states[1].dir, LocalDirection::Left);
        let dirs: Vec<_> = out.record.global_dirs().collect();
        assert_eq!(dirs, vec![GlobalDirection::Ccw, GlobalDirection::Cw]);
        assert_eq!(out.next.positions, nodes(&[0, 2]));
    }

    #[test]
    fn two_node_simple_ring_uses_one_edge_for_both_ports() {
        let ring = RingSpec::new(2).unwrap();
        let c = init(
            &ring,
            &nodes(&[0]),
            &[Chirality::RIGHT_IS_CW],
            Algorithm::Pef1,
        )
        .unwrap();
        let out = step(&ring, &c, &EdgeSet::full(&ring));
        assert_eq!(out.next.positions, nodes(&[1]));
        let out = step(&ring, &c, &EdgeSet::empty(&ring));
        assert_eq!(out.next.positions, nodes(&[0]));
    }

    #[test]
    fn two_node_multigraph_ports_are_distinct() {
        let ring = RingSpec::with_multigraph(2, true).unwrap();
        // Robot at 0 points CCW (left with right=CW): port binds edge 1.
        let c = init(
            &ring,
            &nodes(&[0]),
            &[Chirality::RIGHT_IS_CW],
            Algorithm::Pef1,
        )
        .unwrap();
        let only_edge_0 = EdgeSet::from_present(&ring, [crate::ring::EdgeId(0)]).unwrap();
        let out = step(&ring, &c, &only_edge_0);
        assert_eq!(out.record.states[0].dir, LocalDirection::Right);
        assert_eq!(out.next.positions, nodes(&[1]));
    }
}
