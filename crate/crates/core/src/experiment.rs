//! Single runs, parameter sweeps and impossibility demos driven by an
//! [`ExperimentConfig`].

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::{
    ConfinementMonitor, CoverageMonitor, CoverageStats, DirectionChangeMonitor, InvariantReport,
    MaxTowerMonitor, Monitor, MoveLegalityMonitor, MovedFlagMonitor, OppositeDirsMonitor,
    SentinelMonitor, Verdict,
};
use crate::config::{
    derive_seed, parse_value, set_value, ChiralityPattern, ExperimentConfig, InconclusivePolicy,
    Placement, ResolvedRun, RingConfig, RobotsConfig, RunConfig, ScheduleConfig, ScheduleName,
};
use crate::dynamics::{ConnectivityDiagnosis, Diagnoser, PhaseLog};
use crate::engine::{run_with, ExecutionTrace, RoundRecord, RunOptions};
use crate::error::{Error, Result};
use crate::ring::{NodeId, RingSpec};
use crate::robots::Algorithm;

impl Monitor for Diagnoser {
    fn round(&mut self, _ring: &RingSpec, record: &RoundRecord, _after: &[NodeId]) {
        self.observe(record.round, &record.edges);
    }
}

/// Phase history of a confiner at the end of a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfinerSummary {
    pub advances: usize,
    pub longest_closed: u64,
    pub open_len: u64,
    /// The open phase has lasted at least the stall window.
    pub stalled: bool,
    /// Every closed absence interval has an end round.
    pub closed_intervals_finite: bool,
    pub log: PhaseLog,
}

#[derive(Clone, Debug)]
pub struct SummaryRecord {
    pub config: ExperimentConfig,
    pub digest: String,
    pub seed: u64,
    pub coverage: CoverageStats,
    pub reports: Vec<InvariantReport>,
    pub diagnosis: ConnectivityDiagnosis,
    pub confiner: Option<ConfinerSummary>,
    /// Nodes any robot stood on, in increasing order.
    pub visited: Vec<NodeId>,
    pub wall_ms: f64,
}

impl SummaryRecord {
    /// All requested checks pass, with inconclusive verdicts mapped by the
    /// config's policy.
    pub fn passed(&self) -> bool {
        let policy = self.config.checks.inconclusive;
        self.reports.iter().all(|r| match r.verdict {
            Verdict::Pass => true,
            Verdict::Fail => false,
            Verdict::Inconclusive => policy == InconclusivePolicy::Pass,
        })
    }

    pub fn report(&self, name: &str) -> Option<&InvariantReport> {
        self.reports.iter().find(|r| r.name == name)
    }

    /// Human-readable summary with fixed numeric formatting.
    pub fn to_text(&self) -> String {
        let cfg = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "run digest={} seed={} n={} k={} algorithm={} schedule={} horizon={}",
            self.digest,
            self.seed,
            cfg.ring.n,
            cfg.robots.k,
            cfg.robots.algorithm,
            schedule_label(cfg.schedule.kind),
            cfg.run.horizon
        );
        let c = &self.coverage;
        let _ = writeln!(
            out,
            "coverage epochs={} first_full={} max_gap={} visited={}/{}",
            c.epochs_completed,
            c.first_full_coverage_round
                .map_or("-".into(), |r| r.to_string()),
            c.max_gap(),
            self.visited.len(),
            cfg.ring.n
        );
        let d = &self.diagnosis;
        let _ = writeln!(
            out,
            "diagnosis window={} non_recurrent={} longest_absence={} connected_so_far={}",
            d.window,
            node_list(d.non_recurrent().iter().map(|e| e.0)),
            d.longest_absence(),
            d.eventual_underlying_connected_so_far
        );
        if let Some(cs) = &self.confiner {
            let _ = writeln!(
                out,
                "confiner advances={} longest_closed={} open={} stalled={} closed_finite={} visited={}",
                cs.advances,
                cs.longest_closed,
                cs.open_len,
                cs.stalled,
                cs.closed_intervals_finite,
                node_list(self.visited.iter().map(|n| n.0))
            );
        }
        for r in &self.reports {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "result={} wall_ms={:.3}",
            if self.passed() { "pass" } else { "fail" },
            self.wall_ms
        );
        out
    }

    /// TOML form: a `summary` section with the outcome and a `config` section
    /// that [`replay_config`] feeds back into [`run_experiment`].
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "summary.digest = \"{}\"", self.digest);
        let _ = writeln!(out, "summary.seed = {}", self.seed);
        let _ = writeln!(out, "summary.passed = {}", self.passed());
        let _ = writeln!(out, "summary.epochs = {}", self.coverage.epochs_completed);
        let _ = writeln!(out, "summary.max_gap = {}", self.coverage.max_gap());
        let _ = writeln!(out, "summary.visited = {}", self.visited.len());
        for r in &self.reports {
            let _ = writeln!(out, "summary.verdicts.{} = \"{}\"", r.name, r.verdict);
        }
        let _ = writeln!(out, "summary.wall_ms = {:.3}", self.wall_ms);
        for line in self.config.to_flat_toml().lines() {
            let _ = writeln!(out, "config.{line}");
        }
        out
    }
}

fn node_list(items: impl Iterator<Item = usize>) -> String {
    let parts: Vec<String> = items.map(|i| i.to_string()).collect();
    format!("[{}]", parts.join(","))
}

fn schedule_label(kind: ScheduleName) -> &'static str {
    match kind {
        ScheduleName::Static => "static",
        ScheduleName::Periodic => "periodic",
        ScheduleName::Bernoulli => "bernoulli",
        ScheduleName::Bounded => "bounded",
        ScheduleName::EventualMissing => "eventual_missing",
        ScheduleName::OneRobotConfiner => "one_robot_confiner",
        ScheduleName::TwoRobotConfiner => "two_robot_confiner",
    }
}

/// Recovers the config stored in a summary written by [`SummaryRecord::to_toml`]
/// and checks it against the recorded digest.
pub fn replay_config(summary_toml: &str) -> Result<ExperimentConfig> {
    let mut table: toml::Table =
        toml::from_str(summary_toml).map_err(|e| Error::Config(e.to_string()))?;
    let config = match table.remove("config") {
        Some(toml::Value::Table(t)) => ExperimentConfig::from_table(t)?,
        _ => return Err(Error::Config("summary has no config section".into())),
    };
    let recorded = table
        .get("summary")
        .and_then(|s| s.get("digest"))
        .and_then(|d| d.as_str());
    if let Some(digest) = recorded {
        if digest != config.digest() {
            return Err(Error::Config(format!(
                "summary digest {digest} does not match its config ({})",
                config.digest()
            )));
        }
    }
    Ok(config)
}

fn bool_report(name: &str, ok: bool, round: u64, witness: String) -> InvariantReport {
    if ok {
        let mut r = InvariantReport::pass(name);
        r.witness = witness;
        r
    } else {
        InvariantReport::fail(name, round, witness)
    }
}

/// Runs one experiment. Trace lines go to `sink` when one is given.
pub fn run_experiment(
    config: &ExperimentConfig,
    sink: Option<&mut dyn Write>,
) -> Result<(SummaryRecord, ExecutionTrace)> {
    let started = Instant::now();
    let ResolvedRun {
        ring,
        initial,
        mut schedule,
        missing_edge,
        confinement,
    } = config.resolve()?;
    let checks = &config.checks;
    let horizon = config.run.horizon;

    let mut coverage = CoverageMonitor::new(&ring);
    let mut diagnoser = Diagnoser::new(ring, checks.diagnose_window);
    let mut visited = ConfinementMonitor::new(&confinement.clone().unwrap_or_default());
    let mut max_tower = checks.max_tower.then(MaxTowerMonitor::new);
    let mut opposite = checks.opposite_dirs.then(OppositeDirsMonitor::new);
    let mut moved_flag = checks.moved_flag.then(MovedFlagMonitor::new);
    let mut dir_changes = checks.dir_changes.then(DirectionChangeMonitor::new);
    let mut legality = checks.move_legality.then(MoveLegalityMonitor::new);
    let mut sentinels = match (checks.sentinels, missing_edge) {
        (true, Some((edge, t))) => Some(SentinelMonitor::new(edge, t, checks.sentinel_tail)),
        _ => None,
    };

    let trace = {
        let mut monitors: Vec<&mut dyn Monitor> = vec![&mut coverage, &mut diagnoser, &mut visited];
        if let Some(m) = max_tower.as_mut() {
            monitors.push(m);
        }
        if let Some(m) = opposite.as_mut() {
            monitors.push(m);
        }
        if let Some(m) = moved_flag.as_mut() {
            monitors.push(m);
        }
        if let Some(m) = dir_changes.as_mut() {
            monitors.push(m);
        }
        if let Some(m) = legality.as_mut() {
            monitors.push(m);
        }
        if let Some(m) = sentinels.as_mut() {
            monitors.push(m);
        }
        let options = RunOptions {
            trace_cap: Some(config.run.trace_cap),
        };
        run_with(
            &mut schedule,
            initial,
            horizon,
            &options,
            &mut monitors,
            sink,
        )?
    };

    let stats = coverage.stats();
    let mut reports = Vec::new();
    if let Some(m) = max_tower {
        reports.push(m.report());
    }
    if let Some(m) = opposite {
        reports.push(m.report());
    }
    if let Some(m) = moved_flag {
        reports.push(m.report());
    }
    if let Some(m) = dir_changes {
        reports.push(m.report());
    }
    if let Some(m) = legality {
        reports.push(m.report());
    }
    if let Some(m) = sentinels {
        reports.push(m.report());
    }
    if confinement.is_some() {
        reports.push(visited.report());
    }
    if let Some(min) = checks.min_epochs {
        let got = stats.epochs_completed;
        reports.push(bool_report(
            "min_epochs",
            got >= min,
            horizon,
            format!("epochs {got}, required {min}"),
        ));
    }
    if let Some(bound) = checks.max_gap {
        let got = stats.max_gap();
        reports.push(bool_report(
            "max_gap",
            got < bound,
            horizon,
            format!("max gap {got}, bound {bound}"),
        ));
    }
    let seed = config.schedule.seed;
    let reports = reports.into_iter().map(|r| r.with_seed(seed)).collect();

    let confiner = schedule.confiner_log().map(|log| {
        let open_len = log.open_len(horizon);
        ConfinerSummary {
            advances: log.advances(),
            longest_closed: log.longest_closed(),
            open_len,
            stalled: open_len >= checks.stall_window,
            closed_intervals_finite: log.closed.iter().all(|i| i.end.is_some()),
            log: log.clone(),
        }
    });

    let summary = SummaryRecord {
        config: config.clone(),
        digest: config.digest(),
        seed,
        coverage: stats,
        reports,
        diagnosis: diagnoser.finish(),
        confiner,
        visited: visited.visited().iter().copied().collect(),
        wall_ms: started.elapsed().as_secs_f64() * 1000.0,
    };
    Ok((summary, trace))
}

/// One sweep dimension: a dotted config key and the values it takes.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

impl FromStr for Axis {
    type Err = Error;

    /// `key=v1,v2,…`, `key=a..b` (exclusive) or `key=a..=b`.
    fn from_str(s: &str) -> Result<Self> {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("axis `{s}` is not key=values")))?;
        let raw = raw.trim();
        let range = raw
            .split_once("..=")
            .map(|(a, b)| (a, b, true))
            .or_else(|| raw.split_once("..").map(|(a, b)| (a, b, false)));
        let values = match range {
            Some((a, b, inclusive)) => {
                let parse = |x: &str| {
                    x.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::Config(format!("axis range `{raw}` needs integers")))
                };
                let (a, b) = (parse(a)?, parse(b)?);
                let end = if inclusive { b + 1 } else { b };
                (a..end).map(toml::Value::Integer).collect()
            }
            None => split_top_level(raw).into_iter().map(parse_value).collect(),
        };
        Ok(Axis {
            key: key.trim().to_string(),
            values,
        })
    }
}

/// Splits on commas outside brackets, so list values survive.
fn split_top_level(raw: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in raw.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(raw[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(raw[start..].trim());
    parts.retain(|p| !p.is_empty());
    parts
}

#[derive(Debug)]
pub struct SweepCell {
    pub index: usize,
    pub assignments: Vec<(String, toml::Value)>,
    pub outcome: Result<SummaryRecord>,
}

impl SweepCell {
    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .assignments
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        parts.join(" ")
    }

    /// `cell=<i> <assignments> result=pass|fail|error …`
    pub fn to_line(&self) -> String {
        let head = format!("cell={} {}", self.index, self.label());
        match &self.outcome {
            Ok(s) => format!(
                "{} seed={} result={} epochs={} max_gap={}",
                head.trim_end(),
                s.seed,
                if s.passed() { "pass" } else { "fail" },
                s.coverage.epochs_completed,
                s.coverage.max_gap()
            ),
            Err(e) => format!("{} result=error error=\"{e}\"", head.trim_end()),
        }
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var("DYNARING_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
}

/// Runs every cell of the Cartesian product of `axes` over `template`.
///
/// Unless `schedule.seed` is itself an axis, each cell of a non-empty sweep
/// gets a seed derived from the template seed and the cell index. Cells run
/// in parallel (at most `DYNARING_THREADS` at once) and come back in order.
pub fn sweep(template: &toml::Table, axes: &[Axis]) -> Vec<SweepCell> {
    let mut cells: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
    for axis in axes {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push((axis.key.clone(), v.clone()));
                    next
                })
            })
            .collect();
    }
    let derive = !axes.is_empty() && axes.iter().all(|a| a.key != "schedule.seed");
    let base_seed = template
        .get("schedule")
        .and_then(|s| s.get("seed"))
        .and_then(|s| s.as_integer())
        .unwrap_or(0) as u64;

    let run_cell = |(index, assignments): (usize, Vec<(String, toml::Value)>)| {
        let outcome = (|| {
            let mut table = template.clone();
            if derive {
                let seed = derive_seed(base_seed, index as u64);
                set_value(
                    &mut table,
                    "schedule.seed",
                    toml::Value::Integer(seed as i64),
                )?;
            }
            for (k, v) in &assignments {
                set_value(&mut table, k, v.clone())?;
            }
            let config = ExperimentConfig::from_table(table)?;
            run_experiment(&config, None).map(|(s, _)| s)
        })();
        SweepCell {
            index,
            assignments,
            outcome,
        }
    };
    let indexed: Vec<_> = cells.into_iter().enumerate().collect();
    match thread_cap().and_then(|t| rayon::ThreadPoolBuilder::new().num_threads(t).build().ok()) {
        Some(pool) => pool.install(|| indexed.into_par_iter().map(run_cell).collect()),
        None => indexed.into_par_iter().map(run_cell).collect(),
    }
}

/// Which under-provisioned team the demo confines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Impossibility {
    OneRobot,
    TwoRobots,
}

impl FromStr for Impossibility {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-robot" | "one_robot" => Ok(Impossibility::OneRobot),
            "two-robots" | "two_robots" => Ok(Impossibility::TwoRobots),
            other => Err(Error::Config(format!(
                "unknown demo `{other}`, expected one-robot or two-robots"
            ))),
        }
    }
}

/// Config pitting the matching confiner against `algorithm`, with the robots
/// placed where the confiner expects them relative to `anchor`.
pub fn demo_config(
    which: Impossibility,
    n: usize,
    horizon: u64,
    algorithm: Algorithm,
    chirality: ChiralityPattern,
    anchor: usize,
) -> ExperimentConfig {
    let (k, kind, positions) = match which {
        Impossibility::OneRobot => (1, ScheduleName::OneRobotConfiner, vec![anchor]),
        Impossibility::TwoRobots => {
            let v = if n == 0 { 0 } else { (anchor + 1) % n };
            (2, ScheduleName::TwoRobotConfiner, vec![anchor, v])
        }
    };
    ExperimentConfig {
        ring: RingConfig {
            n,
            multigraph: false,
        },
        robots: RobotsConfig {
            k,
            algorithm,
            positions: Placement::Explicit(positions),
            chirality,
        },
        schedule: ScheduleConfig {
            kind,
            anchor,
            ..ScheduleConfig::default()
        },
        run: RunConfig {
            horizon,
            ..RunConfig::default()
        },
        checks: crate::config::ChecksConfig {
            confinement: Some(Placement::Named("auto".into())),
            ..Default::default()
        },
    }
}

/// Ring-size preconditions of the confiner demos.
pub fn demo_preconditions(config: &ExperimentConfig) -> Result<()> {
    let (min, adversary) = match config.schedule.kind {
        ScheduleName::OneRobotConfiner => (3, "one-robot"),
        ScheduleName::TwoRobotConfiner => (4, "two-robot"),
        _ => return Err(Error::Config("demo needs a confiner schedule".into())),
    };
    if config.ring.n < min {
        return Err(Error::ConfinerRingTooSmall {
            adversary,
            min,
            n: config.ring.n,
        });
    }
    Ok(())
}

/// Runs a confiner demo. Ring-size preconditions surface as config errors.
pub fn demo_impossible(config: &ExperimentConfig) -> Result<SummaryRecord> {
    demo_preconditions(config)?;
    run_experiment(config, None).map(|(s, _)| s)
}
