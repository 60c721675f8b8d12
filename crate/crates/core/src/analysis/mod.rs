//! Invariant checkers and coverage metrics over executions.
//!
//! Every checker is a [`Monitor`]: it can ride along a live run (so it keeps
//! working past the trace cap) or be replayed over a stored
//! [`ExecutionTrace`]. The `check_*` functions are the replay entry points.
//! Checkers read positions, post-Compute states and edge sets only, never the
//! algorithm, so they apply equally to hand-written traces.

mod checks;
mod coverage;

use std::fmt;

pub use checks::{
    ConfinementMonitor, DirectionChangeMonitor, MaxTowerMonitor, MoveLegalityMonitor,
    MovedFlagMonitor, OppositeDirsMonitor, SentinelMonitor,
};
pub use coverage::{CoverageMonitor, CoverageStats, NodeCoverage};

use crate::engine::{Configuration, ExecutionTrace, RoundRecord};
use crate::ring::{EdgeId, NodeId, RingSpec};

/// Observer of an execution, round by round.
pub trait Monitor {
    fn start(&mut self, _ring: &RingSpec, _initial: &Configuration) {}

    /// `record` is round `t`; `after` holds the positions of `γ_{t+1}`.
    fn round(&mut self, ring: &RingSpec, record: &RoundRecord, after: &[NodeId]);

    fn finish(&mut self, _ring: &RingSpec, _last: &Configuration) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Pass,
    Fail,
    /// The property can only be witnessed, and was not within the horizon.
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantReport {
    pub name: String,
    pub verdict: Verdict,
    pub first_violation: Option<u64>,
    /// Seed of the run, attached by the experiment layer so a failure replays.
    pub witness_seed: Option<u64>,
    /// Snapshot at the first violation, or a short note for other verdicts.
    pub witness: String,
}

impl InvariantReport {
    pub(crate) fn pass(name: &str) -> Self {
        InvariantReport {
            name: name.to_string(),
            verdict: Verdict::Pass,
            first_violation: None,
            witness_seed: None,
            witness: String::new(),
        }
    }

    pub(crate) fn fail(name: &str, round: u64, witness: String) -> Self {
        InvariantReport {
            name: name.to_string(),
            verdict: Verdict::Fail,
            first_violation: Some(round),
            witness_seed: None,
            witness,
        }
    }

    pub(crate) fn inconclusive(name: &str, note: String) -> Self {
        InvariantReport {
            name: name.to_string(),
            verdict: Verdict::Inconclusive,
            first_violation: None,
            witness_seed: None,
            witness: note,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.witness_seed = Some(seed);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// `inv=<name> verdict=<v> first_violation=<round|-> witness_seed=<u64|->`
    pub fn to_line(&self) -> String {
        let dash = || "-".to_string();
        format!(
            "inv={} verdict={} first_violation={} witness_seed={}",
            self.name,
            self.verdict,
            self.first_violation.map_or_else(dash, |r| r.to_string()),
            self.witness_seed.map_or_else(dash, |s| s.to_string()),
        )
    }
}

fn replay<M: Monitor>(trace: &ExecutionTrace, mut monitor: M) -> M {
    trace.replay(&mut monitor);
    monitor
}

/// No configuration holds three or more robots on one node.
pub fn check_max_tower(trace: &ExecutionTrace) -> InvariantReport {
    replay(trace, MaxTowerMonitor::new()).report()
}

/// Two co-located robots hold opposite global directions after Compute.
pub fn check_tower_opposite_dirs(trace: &ExecutionTrace) -> InvariantReport {
    replay(trace, OppositeDirsMonitor::new()).report()
}

/// Eventually each extremity of `edge` hosts a robot pointing at it, from some
/// round at least `tail` rounds before the end onwards.
pub fn check_sentinels(
    trace: &ExecutionTrace,
    edge: EdgeId,
    t_remove: u64,
    tail: u64,
) -> InvariantReport {
    replay(trace, SentinelMonitor::new(edge, t_remove, tail)).report()
}

pub fn coverage(trace: &ExecutionTrace) -> CoverageStats {
    replay(trace, CoverageMonitor::new(&trace.ring)).stats()
}

/// Every visited node lies in `allowed`.
pub fn check_confinement(trace: &ExecutionTrace, allowed: &[NodeId]) -> InvariantReport {
    replay(trace, ConfinementMonitor::new(allowed)).report()
}

/// Robots change global direction only on rounds where they share a node.
pub fn check_direction_changes(trace: &ExecutionTrace) -> InvariantReport {
    replay(trace, DirectionChangeMonitor::new()).report()
}

/// After Compute, `has_moved_previous_step` equals the actual move of the round.
pub fn check_moved_flag(trace: &ExecutionTrace) -> InvariantReport {
    replay(trace, MovedFlagMonitor::new()).report()
}

/// Robots only cross present edges in their post-Compute direction.
pub fn check_move_legality(trace: &ExecutionTrace) -> InvariantReport {
    replay(trace, MoveLegalityMonitor::new()).report()
}
