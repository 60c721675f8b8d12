use std::fmt::Write as _;
use std::io::Write;

use crate::analysis::Monitor;
use crate::dynamics::EdgeSchedule;
use crate::error::{Error, Result};
use crate::ring::{NodeId, RingSpec};

use super::{co_located, step, Configuration, RoundRecord, TowerRecord, TowerTracker};

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Rounds kept in [`ExecutionTrace::rounds`]; later rounds are only seen
    /// by monitors. `None` keeps everything.
    pub trace_cap: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            trace_cap: Some(1_000_000),
        }
    }
}

/// `(G_0, γ_0), (G_1, γ_1), …` up to the horizon.
#[derive(Clone, Debug)]
pub struct ExecutionTrace {
    pub ring: RingSpec,
    pub initial: Configuration,
    /// Retained prefix of rounds; `rounds[t].round == t`.
    pub rounds: Vec<RoundRecord>,
    pub final_config: Configuration,
    pub towers: Vec<TowerRecord>,
    pub horizon: u64,
}

impl ExecutionTrace {
    pub fn round(&self, t: u64) -> Option<&RoundRecord> {
        self.rounds.get(t as usize)
    }

    pub fn is_truncated(&self) -> bool {
        (self.rounds.len() as u64) < self.horizon
    }

    /// Start-of-round positions of every configuration `γ_0 … γ_h` still retained.
    pub fn configurations(&self) -> impl Iterator<Item = (u64, &[NodeId])> {
        let tail = if self.is_truncated() {
            None
        } else {
            Some((
                self.final_config.round,
                self.final_config.positions.as_slice(),
            ))
        };
        self.rounds
            .iter()
            .map(|r| (r.round, r.positions.as_slice()))
            .chain(tail)
    }

    /// Positions right after round `i` of the retained prefix.
    pub fn positions_after(&self, i: usize) -> &[NodeId] {
        match self.rounds.get(i + 1) {
            Some(next) => &next.positions,
            None => &self.final_config.positions,
        }
    }

    /// Replays the retained rounds through `monitor`.
    pub fn replay(&self, monitor: &mut dyn Monitor) {
        monitor.start(&self.ring, &self.initial);
        for (i, r) in self.rounds.iter().enumerate() {
            monitor.round(&self.ring, r, self.positions_after(i));
        }
        if !self.is_truncated() {
            monitor.finish(&self.ring, &self.final_config);
        }
    }

    /// The text trace, one line per retained round.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rounds {
            out.push_str(&format_trace_line(&self.ring, r));
            out.push('\n');
        }
        out
    }
}

/// `t=<round> E=<bits> R=<node>,<l|r>,<CW|CCW>,<moved>;… TW=<node>:<count>;…`
///
/// Robot fields are the start-of-round node, the post-Compute direction in
/// local and global terms, and whether the robot crossed an edge.
pub fn format_trace_line(_ring: &RingSpec, r: &RoundRecord) -> String {
    let mut line = String::with_capacity(32 + 12 * r.positions.len());
    let _ = write!(line, "t={} E={} R=", r.round, r.edges.to_bitstring());
    for (i, ((p, s), m)) in r.positions.iter().zip(&r.states).zip(&r.moved).enumerate() {
        if i > 0 {
            line.push(';');
        }
        let _ = write!(
            line,
            "{},{},{},{}",
            p.0,
            s.dir.as_char(),
            s.global_dir(),
            u8::from(*m)
        );
    }
    line.push_str(" TW=");
    for (i, (node, members)) in co_located(&r.positions).iter().enumerate() {
        if i > 0 {
            line.push(';');
        }
        let _ = write!(line, "{}:{}", node.0, members.len());
    }
    line
}

/// Runs `horizon` rounds, keeping the whole trace.
pub fn run(
    schedule: &mut EdgeSchedule,
    initial: Configuration,
    horizon: u64,
) -> Result<ExecutionTrace> {
    run_with(
        schedule,
        initial,
        horizon,
        &RunOptions { trace_cap: None },
        &mut [],
        None,
    )
}

/// Runs `horizon` rounds, feeding every round to `monitors` and, if given,
/// writing one trace line per round to `sink`.
pub fn run_with(
    schedule: &mut EdgeSchedule,
    initial: Configuration,
    horizon: u64,
    options: &RunOptions,
    monitors: &mut [&mut dyn Monitor],
    mut sink: Option<&mut dyn Write>,
) -> Result<ExecutionTrace> {
    let ring = *schedule.ring();
    let cap = options.trace_cap.unwrap_or(usize::MAX);
    let mut towers = TowerTracker::new();
    let mut tower_records = towers.observe(initial.round, &initial.positions);
    for m in monitors.iter_mut() {
        m.start(&ring, &initial);
    }
    let mut rounds = Vec::with_capacity(horizon.min(cap as u64).min(1 << 20) as usize);
    let mut config = initial.clone();
    for _ in 0..horizon {
        let t = config.round;
        let edges = schedule.edges_at(t, Some(&config))?;
        let out = step(&ring, &config, &edges);
        for m in monitors.iter_mut() {
            m.round(&ring, &out.record, &out.next.positions);
        }
        if let Some(w) = sink.as_deref_mut() {
            writeln!(w, "{}", format_trace_line(&ring, &out.record)).map_err(|source| {
                Error::Io {
                    path: "<trace>".into(),
                    source,
                }
            })?;
        }
        tower_records.extend(towers.observe(out.next.round, &out.next.positions));
        if rounds.len() < cap {
            rounds.push(out.record);
        }
        config = out.next;
    }
    for m in monitors.iter_mut() {
        m.finish(&ring, &config);
    }
    tower_records.extend(towers.finish());
    Ok(ExecutionTrace {
        ring,
        initial,
        rounds,
        final_config: config,
        towers: tower_records,
        horizon,
    })
}
