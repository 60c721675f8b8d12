//! Adaptive adversaries that keep under-provisioned teams inside a few nodes.
//!
//! Both confiners realise the edge-removal schedules of the impossibility
//! constructions online: they observe each configuration, detect whether the
//! designated robot has just made the designated move, and if so close the
//! current removal interval and switch to the next phase. Every other edge of
//! the ring stays present, so the only way out of the confinement set is
//! always blocked while the way back is open.

use crate::engine::Configuration;
use crate::error::{Error, Result};
use crate::ring::{EdgeId, GlobalDirection, NodeId, RingSpec};

use super::EdgeSet;

/// A maximal run of rounds during which a phase held `edges` absent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbsenceInterval {
    pub phase: usize,
    pub edges: Vec<EdgeId>,
    pub start: u64,
    /// Inclusive. `None` while the phase is still active.
    pub end: Option<u64>,
}

impl AbsenceInterval {
    /// Length in rounds, counting an open interval up to `horizon` (exclusive).
    pub fn len(&self, horizon: u64) -> u64 {
        match self.end {
            Some(end) => end + 1 - self.start,
            None => horizon.saturating_sub(self.start),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.end.is_some_and(|end| end < self.start)
    }
}

/// Phase history of a confiner.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PhaseLog {
    pub closed: Vec<AbsenceInterval>,
    pub open: Option<AbsenceInterval>,
}

impl PhaseLog {
    pub fn advances(&self) -> usize {
        self.closed.len()
    }

    pub fn longest_closed(&self) -> u64 {
        self.closed.iter().map(|i| i.len(0)).max().unwrap_or(0)
    }

    pub fn open_len(&self, horizon: u64) -> u64 {
        self.open.as_ref().map_or(0, |i| i.len(horizon))
    }

    fn open_phase(&mut self, phase: usize, edges: Vec<EdgeId>, t: u64) {
        self.open = Some(AbsenceInterval {
            phase,
            edges,
            start: t,
            end: None,
        });
    }

    fn close(&mut self, t: u64) {
        if let Some(mut interval) = self.open.take() {
            interval.end = Some(t - 1);
            self.closed.push(interval);
        }
    }
}

fn all_but(ring: &RingSpec, removed: &[EdgeId]) -> EdgeSet {
    let mut set = EdgeSet::full(ring);
    for e in removed {
        set.remove(*e);
    }
    set
}

fn check_robot_count(adversary: &'static str, expected: usize, obs: &Configuration) -> Result<()> {
    if obs.positions.len() != expected {
        return Err(Error::ConfinerRobotCount {
            adversary,
            expected,
            got: obs.positions.len(),
        });
    }
    Ok(())
}

fn check_ring(adversary: &'static str, min: usize, ring: &RingSpec) -> Result<()> {
    if ring.n() < min {
        return Err(Error::ConfinerRingTooSmall {
            adversary,
            min,
            n: ring.n(),
        });
    }
    Ok(())
}

/// Keeps a single robot on `{u, v}` with `v` the CCW neighbour of `u`.
///
/// Phase A (robot on `u`) removes `u`'s CW edge; phase B (robot on `v`)
/// removes `v`'s CCW edge.
#[derive(Clone, Debug)]
pub struct OneRobotConfiner {
    anchor: NodeId,
    phase: OnePhase,
    started: bool,
    log: PhaseLog,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OnePhase {
    AtU,
    AtV,
}

impl OneRobotConfiner {
    const NAME: &'static str = "one-robot";

    pub fn new(anchor: NodeId) -> Self {
        OneRobotConfiner {
            anchor,
            phase: OnePhase::AtU,
            started: false,
            log: PhaseLog::default(),
        }
    }

    pub fn anchor(&self) -> NodeId {
        self.anchor
    }

    pub fn phase(&self) -> OnePhase {
        self.phase
    }

    pub fn log(&self) -> &PhaseLog {
        &self.log
    }

    /// `[u, v]`.
    pub fn confinement_set(&self, ring: &RingSpec) -> [NodeId; 2] {
        [
            self.anchor,
            ring.neighbor(self.anchor, GlobalDirection::Ccw),
        ]
    }

    pub fn removed_edges(&self, ring: &RingSpec, phase: OnePhase) -> Vec<EdgeId> {
        let [u, v] = self.confinement_set(ring);
        match phase {
            OnePhase::AtU => vec![ring.port_edge(u, GlobalDirection::Cw)],
            OnePhase::AtV => vec![ring.port_edge(v, GlobalDirection::Ccw)],
        }
    }

    pub(crate) fn validate(&self, ring: &RingSpec) -> Result<()> {
        check_ring(Self::NAME, 3, ring)?;
        if !ring.contains_node(self.anchor) {
            return Err(Error::NodeOutOfRange {
                node: self.anchor,
                n: ring.n(),
            });
        }
        Ok(())
    }

    /// Observes `obs` (the configuration at round `t`) and emits `E_t`.
    pub fn step(&mut self, ring: &RingSpec, obs: &Configuration, t: u64) -> Result<EdgeSet> {
        check_robot_count(Self::NAME, 1, obs)?;
        let [u, v] = self.confinement_set(ring);
        let pos = obs.positions[0];
        if !self.started {
            if pos != u {
                return Err(Error::ConfinerDesync {
                    adversary: Self::NAME,
                    round: t,
                });
            }
            self.started = true;
            self.log
                .open_phase(0, self.removed_edges(ring, OnePhase::AtU), t);
        }
        let next = match (self.phase, pos) {
            (OnePhase::AtU, p) if p == v => Some(OnePhase::AtV),
            (OnePhase::AtV, p) if p == u => Some(OnePhase::AtU),
            (OnePhase::AtU, p) if p == u => None,
            (OnePhase::AtV, p) if p == v => None,
            _ => {
                return Err(Error::ConfinerDesync {
                    adversary: Self::NAME,
                    round: t,
                })
            }
        };
        if let Some(phase) = next {
            self.log.close(t);
            self.phase = phase;
            let index = match phase {
                OnePhase::AtU => 0,
                OnePhase::AtV => 1,
            };
            self.log
                .open_phase(index, self.removed_edges(ring, phase), t);
        }
        Ok(all_but(ring, &self.removed_edges(ring, self.phase)))
    }
}

/// Keeps two robots on `{u, v, w}` (consecutive clockwise) by cycling through
/// four removal phases.
///
/// | phase | `r1` | `r2` | removed                    | advances when |
/// |-------|------|------|----------------------------|---------------|
/// | 0     | u    | v    | e_ul, e_vl                 | r2 reaches w  |
/// | 1     | u    | w    | e_ul, e_wl, e_wr           | r1 reaches v  |
/// | 2     | v    | w    | e_wl, e_wr                 | r1 reaches u  |
/// | 3     | u    | w    | e_ul, e_ur, e_wr           | r2 reaches v  |
///
/// `r1` is the robot that starts on `u`, `r2` the one that starts on `v`.
#[derive(Clone, Debug)]
pub struct TwoRobotConfiner {
    anchor: NodeId,
    phase: usize,
    /// Robot indices of `(r1, r2)`, bound on the first observation.
    robots: Option<(usize, usize)>,
    log: PhaseLog,
}

impl TwoRobotConfiner {
    const NAME: &'static str = "two-robot";

    pub fn new(anchor: NodeId) -> Self {
        TwoRobotConfiner {
            anchor,
            phase: 0,
            robots: None,
            log: PhaseLog::default(),
        }
    }

    pub fn anchor(&self) -> NodeId {
        self.anchor
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    pub fn log(&self) -> &PhaseLog {
        &self.log
    }

    /// `[u, v, w]`.
    pub fn confinement_set(&self, ring: &RingSpec) -> [NodeId; 3] {
        super::two_robot_anchors(ring, self.anchor)
    }

    pub fn removed_edges(&self, ring: &RingSpec, phase: usize) -> Vec<EdgeId> {
        use GlobalDirection::{Ccw, Cw};
        let [u, v, w] = self.confinement_set(ring);
        let e_ul = ring.port_edge(u, Ccw);
        let e_ur = ring.port_edge(u, Cw);
        let e_vl = ring.port_edge(v, Ccw);
        let e_wl = ring.port_edge(w, Ccw);
        let e_wr = ring.port_edge(w, Cw);
        match phase {
            0 => vec![e_ul, e_vl],
            1 => vec![e_ul, e_wl, e_wr],
            2 => vec![e_wl, e_wr],
            3 => vec![e_ul, e_ur, e_wr],
            _ => unreachable!("two-robot confiner has four phases"),
        }
    }

    /// Expected `(r1, r2)` positions while `phase` is active.
    fn expected(&self, ring: &RingSpec, phase: usize) -> (NodeId, NodeId) {
        let [u, v, w] = self.confinement_set(ring);
        match phase {
            0 => (u, v),
            1 => (u, w),
            2 => (v, w),
            3 => (u, w),
            _ => unreachable!(),
        }
    }

    pub(crate) fn validate(&self, ring: &RingSpec) -> Result<()> {
        check_ring(Self::NAME, 4, ring)?;
        if !ring.contains_node(self.anchor) {
            return Err(Error::NodeOutOfRange {
                node: self.anchor,
                n: ring.n(),
            });
        }
        Ok(())
    }

    pub fn step(&mut self, ring: &RingSpec, obs: &Configuration, t: u64) -> Result<EdgeSet> {
        check_robot_count(Self::NAME, 2, obs)?;
        check_ring(Self::NAME, 4, ring)?;
        let desync = || Error::ConfinerDesync {
            adversary: Self::NAME,
            round: t,
        };
        let (r1, r2) = match self.robots {
            Some(ids) => ids,
            None => {
                let [u, v, _] = self.confinement_set(ring);
                let ids = match (obs.positions[0], obs.positions[1]) {
                    (a, b) if a == u && b == v => (0, 1),
                    (a, b) if a == v && b == u => (1, 0),
                    _ => return Err(desync()),
                };
                self.robots = Some(ids);
                self.log.open_phase(0, self.removed_edges(ring, 0), t);
                ids
            }
        };
        let now = (obs.positions[r1], obs.positions[r2]);
        let next = (self.phase + 1) % 4;
        if now == self.expected(ring, next) && now != self.expected(ring, self.phase) {
            self.log.close(t);
            self.phase = next;
            self.log.open_phase(next, self.removed_edges(ring, next), t);
        } else if now != self.expected(ring, self.phase) {
            return Err(desync());
        }
        Ok(all_but(ring, &self.removed_edges(ring, self.phase)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robots::{Algorithm, Chirality, RobotState};

    fn config(positions: &[usize], round: u64) -> Configuration {
        Configuration {
            positions: positions.iter().copied().map(NodeId).collect(),
            states: positions
                .iter()
                .map(|_| RobotState::initial(Algorithm::Pef3Plus, Chirality::RIGHT_IS_CW))
                .collect(),
            round,
        }
    }

    fn absent(ring: &RingSpec, set: &EdgeSet) -> Vec<usize> {
        ring.edges()
            .filter(|e| !set.contains(*e))
            .map(|e| e.0)
            .collect()
    }

    #[test]
    fn one_robot_phase_a_then_b() {
        let ring = RingSpec::new(5).unwrap();
        let mut c = OneRobotConfiner::new(NodeId(0));
        let set = c.step(&ring, &config(&[0], 0), 0).unwrap();
        assert_eq!(absent(&ring, &set), vec![0]);
        let set = c.step(&ring, &config(&[4], 1), 1).unwrap();
        assert_eq!(c.phase(), OnePhase::AtV);
        assert_eq!(absent(&ring, &set), vec![3]);
        assert_eq!(c.log().closed.len(), 1);
        assert_eq!(c.log().closed[0].end, Some(0));
    }

    #[test]
    fn one_robot_holds_phase_while_robot_stays() {
        let ring = RingSpec::new(5).unwrap();
        let mut c = OneRobotConfiner::new(NodeId(0));
        for t in 0..50 {
            let set = c.step(&ring, &config(&[0], t), t).unwrap();
            assert_eq!(absent(&ring, &set), vec![0]);
        }
        assert_eq!(c.phase(), OnePhase::AtU);
        assert_eq!(c.log().advances(), 0);
        assert_eq!(c.log().open_len(50), 50);
    }

    #[test]
    fn one_robot_rejects_wrong_team() {
        let ring = RingSpec::new(5).unwrap();
        let mut c = OneRobotConfiner::new(NodeId(0));
        assert!(matches!(
            c.step(&ring, &config(&[0, 2], 0), 0),
            Err(Error::ConfinerRobotCount { got: 2, .. })
        ));
        assert!(c.validate(&RingSpec::new(2).unwrap()).is_err());
    }

    #[test]
    fn two_robot_removed_sets() {
        let ring = RingSpec::new(6).unwrap();
        let c = TwoRobotConfiner::new(NodeId(0));
        let sorted = |mut v: Vec<EdgeId>| {
            v.sort();
            v.into_iter().map(|e| e.0).collect::<Vec<_>>()
        };
        assert_eq!(sorted(c.removed_edges(&ring, 0)), vec![0, 5]);
        assert_eq!(sorted(c.removed_edges(&ring, 1)), vec![1, 2, 5]);
        assert_eq!(sorted(c.removed_edges(&ring, 2)), vec![1, 2]);
        assert_eq!(sorted(c.removed_edges(&ring, 3)), vec![0, 2, 5]);
    }

    #[test]
    fn two_robot_cycles_through_phases() {
        let ring = RingSpec::new(6).unwrap();
        let mut c = TwoRobotConfiner::new(NodeId(0));
        let walk = [[0, 1], [0, 1], [0, 2], [1, 2], [0, 2], [0, 1], [0, 2]];
        let phases = [0, 0, 1, 2, 3, 0, 1];
        for (t, (pos, phase)) in walk.iter().zip(phases).enumerate() {
            c.step(&ring, &config(pos, t as u64), t as u64).unwrap();
            assert_eq!(c.phase(), phase, "round {t}");
        }
        assert_eq!(c.log().advances(), 5);
    }

    #[test]
    fn two_robot_detects_escape() {
        let ring = RingSpec::new(6).unwrap();
        let mut c = TwoRobotConfiner::new(NodeId(0));
        c.step(&ring, &config(&[0, 1], 0), 0).unwrap();
        assert!(matches!(
            c.step(&ring, &config(&[5, 1], 1), 1),
            Err(Error::ConfinerDesync { .. })
        ));
        assert!(c.validate(&RingSpec::new(3).unwrap()).is_err());
    }
}
