use crate::engine::ExecutionTrace;
use crate::error::{Error, Result};
use crate::ring::{EdgeId, NodeId, RingSpec};

use super::EdgeSet;

/// True iff exactly one adjacent edge of `u` is absent at every round of
/// `[t, t2]` while the other one is present at every round of `[t, t2]`.
pub fn one_edge(trace: &ExecutionTrace, u: NodeId, t: u64, t2: u64) -> Result<bool> {
    if t > t2 {
        return Err(Error::Config(format!(
            "OneEdge interval [{t}, {t2}] is empty"
        )));
    }
    let ring = trace.ring;
    let (cw, ccw) = ring.adjacent_edges(u);
    if cw == ccw {
        return Ok(false);
    }
    let mut cw_always = true;
    let mut cw_never = true;
    let mut ccw_always = true;
    let mut ccw_never = true;
    for round in t..=t2 {
        let edges = &trace
            .round(round)
            .ok_or(Error::Config(format!(
                "round {round} is not retained in the trace"
            )))?
            .edges;
        let (a, b) = (edges.contains(cw), edges.contains(ccw));
        cw_always &= a;
        cw_never &= !a;
        ccw_always &= b;
        ccw_never &= !b;
    }
    Ok((cw_never && ccw_always) || (ccw_never && cw_always))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeDiagnosis {
    pub last_seen: Option<u64>,
    /// Longest run of consecutive absent rounds, including a run still open.
    pub longest_absence: u64,
    pub current_absence: u64,
    pub recurrent_so_far: bool,
}

/// Finite-prefix view of which edges look recurrent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectivityDiagnosis {
    pub window: u64,
    pub rounds: u64,
    pub edges: Vec<EdgeDiagnosis>,
    pub eventual_underlying_connected_so_far: bool,
}

impl ConnectivityDiagnosis {
    pub fn non_recurrent(&self) -> Vec<EdgeId> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, d)| !d.recurrent_so_far)
            .map(|(i, _)| EdgeId(i))
            .collect()
    }

    pub fn longest_absence(&self) -> u64 {
        self.edges
            .iter()
            .map(|d| d.longest_absence)
            .max()
            .unwrap_or(0)
    }
}

/// Incremental builder for [`ConnectivityDiagnosis`].
#[derive(Clone, Debug)]
pub struct Diagnoser {
    ring: RingSpec,
    window: u64,
    rounds: u64,
    edges: Vec<EdgeDiagnosis>,
}

impl Diagnoser {
    pub fn new(ring: RingSpec, window: u64) -> Self {
        Diagnoser {
            ring,
            window: window.max(1),
            rounds: 0,
            edges: vec![EdgeDiagnosis::default(); ring.edge_count()],
        }
    }

    pub fn observe(&mut self, t: u64, edges: &EdgeSet) {
        for (i, d) in self.edges.iter_mut().enumerate() {
            if edges.contains(EdgeId(i)) {
                d.last_seen = Some(t);
                d.current_absence = 0;
            } else {
                d.current_absence += 1;
                d.longest_absence = d.longest_absence.max(d.current_absence);
            }
        }
        self.rounds = self.rounds.max(t + 1);
    }

    pub fn finish(&self) -> ConnectivityDiagnosis {
        let cutoff = self.rounds.saturating_sub(self.window);
        let edges: Vec<EdgeDiagnosis> = self
            .edges
            .iter()
            .map(|d| EdgeDiagnosis {
                recurrent_so_far: d.last_seen.is_some_and(|s| s >= cutoff),
                ..d.clone()
            })
            .collect();
        let recurrent = edges.iter().filter(|d| d.recurrent_so_far).count();
        // Any n - 1 edges of a ring (or one of two parallel edges) span it.
        let connected = recurrent + 1 >= self.ring.n();
        ConnectivityDiagnosis {
            window: self.window,
            rounds: self.rounds,
            edges,
            eventual_underlying_connected_so_far: connected,
        }
    }
}

/// Diagnoses the retained rounds of `trace` with a trailing window of `window` rounds.
pub fn diagnose(trace: &ExecutionTrace, window: u64) -> ConnectivityDiagnosis {
    let mut d = Diagnoser::new(trace.ring, window);
    for r in &trace.rounds {
        d.observe(r.round, &r.edges);
    }
    d.finish()
}
