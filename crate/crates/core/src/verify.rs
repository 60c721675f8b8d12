//! The acceptance suite: one function per criterion, each returning a
//! [`CriterionOutcome`] with a one-line detail.
//!
//! Criteria 2 and 3 reuse the runs of criterion 1, which are computed once per
//! process and shared.

use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::analysis::{
    check_tower_opposite_dirs, ConfinementMonitor, CoverageMonitor, InvariantReport,
    MaxTowerMonitor, Monitor, OppositeDirsMonitor, SentinelMonitor, Verdict,
};
use crate::config::{
    ChecksConfig, ChiralityPattern, EdgeChoice, ExperimentConfig, Placement, RingConfig,
    RobotsConfig, RunConfig, ScheduleConfig, ScheduleName,
};
use crate::dynamics::{apply_removal, EdgeSchedule, EdgeSet, RemovalMask, ScheduleKind};
use crate::engine::{init, run, run_with, ExecutionTrace, RoundRecord, RunOptions};
use crate::error::Result;
use crate::experiment::{
    demo_config, demo_impossible, replay_config, run_experiment, Impossibility,
};
use crate::ring::{EdgeId, NodeId, RingSpec};
use crate::robots::{Algorithm, Chirality, LocalDirection, RobotState};

/// Expected trace for PEF_3+ with three robots on `{0, 1, 2}` of a static
/// 4-ring, worked out by hand.
pub const GOLDEN_N4_K3_STATIC: &str = include_str!("../testdata/pef3plus_n4_k3_static.trace");

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    /// `criterion <id> <name>: PASS|FAIL <detail>`
    pub fn to_line(&self) -> String {
        format!(
            "criterion {} {}: {} {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

fn outcome(id: u8, name: &'static str, passed: bool, detail: String) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name,
        passed,
        detail,
    }
}

fn base_config(
    n: usize,
    k: usize,
    algorithm: Algorithm,
    seed: u64,
    horizon: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        ring: RingConfig {
            n,
            multigraph: false,
        },
        robots: RobotsConfig {
            k,
            algorithm,
            positions: Placement::Named("random".into()),
            chirality: ChiralityPattern::Named("random".into()),
        },
        schedule: ScheduleConfig {
            seed,
            ..ScheduleConfig::default()
        },
        run: RunConfig {
            horizon,
            trace_emit: false,
            trace_cap: 0,
        },
        checks: ChecksConfig::default(),
    }
}

/// Compact result of one suite run.
#[derive(Clone, Debug)]
pub struct SuiteRun {
    pub label: String,
    pub reports: Vec<InvariantReport>,
    pub epochs: u64,
    pub max_gap: u64,
}

impl SuiteRun {
    fn verdict(&self, name: &str) -> Verdict {
        self.reports
            .iter()
            .find(|r| r.name == name)
            .map_or(Verdict::Inconclusive, |r| r.verdict)
    }

    fn failures(&self) -> impl Iterator<Item = &InvariantReport> {
        self.reports.iter().filter(|r| r.verdict == Verdict::Fail)
    }
}

fn run_suite(configs: Vec<(String, ExperimentConfig)>) -> Vec<SuiteRun> {
    configs
        .into_par_iter()
        .map(|(label, cfg)| match run_experiment(&cfg, None) {
            Ok((s, _)) => SuiteRun {
                label,
                epochs: s.coverage.epochs_completed,
                max_gap: s.coverage.max_gap(),
                reports: s.reports,
            },
            Err(e) => SuiteRun {
                label,
                reports: vec![InvariantReport::fail("run", 0, e.to_string())],
                epochs: 0,
                max_gap: u64::MAX,
            },
        })
        .collect()
}

fn first_failure(runs: &[SuiteRun], name: Option<&str>) -> String {
    runs.iter()
        .find_map(|r| {
            r.failures()
                .find(|f| name.is_none_or(|n| f.name == n))
                .map(|f| format!(" first: {} {} ({})", r.label, f.to_line(), f.witness))
        })
        .unwrap_or_default()
}

/// `(k, n)` pairs, 50 seeds and three schedules over 10,000 rounds.
pub fn coverage_suite() -> &'static [SuiteRun] {
    static RUNS: OnceLock<Vec<SuiteRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut configs = Vec::new();
        for k in 3..=5usize {
            for n in k + 1..=12 {
                for seed in 0..50u64 {
                    for kind in ["static", "bounded", "eventual_missing"] {
                        let mut cfg = base_config(n, k, Algorithm::Pef3Plus, seed, 10_000);
                        match kind {
                            "static" => cfg.schedule.kind = ScheduleName::Static,
                            "bounded" => {
                                cfg.schedule.kind = ScheduleName::Bounded;
                                cfg.schedule.bound = 8;
                            }
                            _ => {
                                cfg.schedule.kind = ScheduleName::EventualMissing;
                                cfg.schedule.base = ScheduleName::Bounded;
                                cfg.schedule.bound = 8;
                                cfg.schedule.edge = Some(EdgeChoice::Named("random".into()));
                                cfg.schedule.t_remove = 100;
                            }
                        }
                        cfg.checks.max_tower = true;
                        cfg.checks.opposite_dirs = true;
                        cfg.checks.min_epochs = Some(5);
                        cfg.checks.max_gap = Some(5_000);
                        configs.push((format!("k={k} n={n} seed={seed} schedule={kind}"), cfg));
                    }
                }
            }
        }
        run_suite(configs)
    })
}

/// 1,000 Bernoulli(0.5) runs with no recurrence guarantee.
pub fn stress_suite() -> &'static [SuiteRun] {
    static RUNS: OnceLock<Vec<SuiteRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let pairs: Vec<(usize, usize)> = (3..=5usize)
            .flat_map(|k| (k + 1..=12).map(move |n| (k, n)))
            .collect();
        let configs = (0..1000u64)
            .map(|i| {
                let (k, n) = pairs[i as usize % pairs.len()];
                let mut cfg = base_config(n, k, Algorithm::Pef3Plus, 10_000 + i, 2_000);
                cfg.schedule.kind = ScheduleName::Bernoulli;
                cfg.schedule.p = 0.5;
                cfg.checks.max_tower = true;
                cfg.checks.opposite_dirs = true;
                (
                    format!("k={k} n={n} seed={} schedule=bernoulli", 10_000 + i),
                    cfg,
                )
            })
            .collect();
        run_suite(configs)
    })
}

pub fn criterion_1_coverage() -> CriterionOutcome {
    let runs = coverage_suite();
    let bad: Vec<&SuiteRun> = runs
        .iter()
        .filter(|r| {
            r.verdict("min_epochs") != Verdict::Pass || r.verdict("max_gap") != Verdict::Pass
        })
        .collect();
    let min_epochs = runs.iter().map(|r| r.epochs).min().unwrap_or(0);
    let worst_gap = runs.iter().map(|r| r.max_gap).max().unwrap_or(0);
    let mut detail = format!(
        "runs={} failing={} min_epochs={} worst_max_gap={}",
        runs.len(),
        bad.len(),
        min_epochs,
        worst_gap
    );
    if let Some(r) = bad.first() {
        detail.push_str(&format!(
            " first: {} epochs={} max_gap={}",
            r.label, r.epochs, r.max_gap
        ));
    }
    outcome(1, "pef3plus_coverage", bad.is_empty(), detail)
}

pub fn criterion_2_tower_bound() -> CriterionOutcome {
    let mut runs = coverage_suite().to_vec();
    runs.extend_from_slice(stress_suite());
    let violations = runs
        .iter()
        .filter(|r| r.verdict(MaxTowerMonitor::NAME) != Verdict::Pass)
        .count();
    let mut detail = format!("runs={} violations={}", runs.len(), violations);
    detail.push_str(&first_failure(&runs, Some(MaxTowerMonitor::NAME)));
    outcome(2, "tower_size_bound", violations == 0, detail)
}

/// Two robots on node 1, both heading clockwise after Compute.
pub fn same_direction_tower_fixture() -> ExecutionTrace {
    let ring = RingSpec::new(4).expect("valid ring");
    let cw = RobotState {
        dir: LocalDirection::Right,
        has_moved_previous_step: true,
        chirality: Chirality::RIGHT_IS_CW,
        algorithm: Algorithm::Pef3Plus,
    };
    let initial = init(
        &ring,
        &[NodeId(0), NodeId(1)],
        &[Chirality::RIGHT_IS_CW; 2],
        Algorithm::Pef3Plus,
    )
    .expect("valid placement");
    let mut edges = EdgeSet::full(&ring);
    edges.remove(EdgeId(1));
    let round = |t: u64, positions: Vec<NodeId>, moved: Vec<bool>| RoundRecord {
        round: t,
        edges: edges.clone(),
        positions,
        states: vec![cw; 2],
        moved,
    };
    let rounds = vec![
        round(0, vec![NodeId(0), NodeId(1)], vec![true, false]),
        round(1, vec![NodeId(1), NodeId(1)], vec![false, false]),
    ];
    let mut final_config = initial.clone();
    final_config.positions = vec![NodeId(1), NodeId(1)];
    final_config.states = vec![cw; 2];
    final_config.round = 2;
    ExecutionTrace {
        ring,
        initial,
        rounds,
        final_config,
        towers: Vec::new(),
        horizon: 2,
    }
}

pub fn criterion_3_opposite_dirs() -> CriterionOutcome {
    let mut runs = coverage_suite().to_vec();
    runs.extend_from_slice(stress_suite());
    let violations = runs
        .iter()
        .filter(|r| r.verdict(OppositeDirsMonitor::NAME) != Verdict::Pass)
        .count();
    let fixture = check_tower_opposite_dirs(&same_direction_tower_fixture());
    let flagged = fixture.verdict == Verdict::Fail && fixture.first_violation == Some(1);
    let mut detail = format!(
        "runs={} violations={} fixture_flagged={}",
        runs.len(),
        violations,
        flagged
    );
    detail.push_str(&first_failure(&runs, Some(OppositeDirsMonitor::NAME)));
    outcome(3, "tower_opposite_dirs", violations == 0 && flagged, detail)
}

pub fn criterion_4_sentinels() -> CriterionOutcome {
    let mut configs = Vec::new();
    for n in 5..=10usize {
        for seed in 0..20u64 {
            let mut cfg = base_config(n, 3, Algorithm::Pef3Plus, seed, 5_000);
            cfg.schedule.kind = ScheduleName::EventualMissing;
            cfg.schedule.base = ScheduleName::Bounded;
            cfg.schedule.bound = 8;
            cfg.schedule.edge = Some(EdgeChoice::Named("random".into()));
            cfg.schedule.t_remove = 50;
            cfg.checks.sentinels = true;
            cfg.checks.sentinel_tail = 1_000;
            configs.push((format!("n={n} seed={seed}"), cfg));
        }
    }
    let runs = run_suite(configs);
    let count = |v: Verdict| {
        runs.iter()
            .filter(|r| r.verdict(SentinelMonitor::NAME) == v)
            .count()
    };
    let (pass, fail, inconclusive) = (
        count(Verdict::Pass),
        count(Verdict::Fail),
        count(Verdict::Inconclusive),
    );
    let errors = runs
        .iter()
        .filter(|r| r.verdict("run") == Verdict::Fail)
        .count();
    let ratio = pass as f64 / runs.len() as f64;
    let mut detail = format!(
        "runs={} pass={} inconclusive={} fail={} errors={} pass_ratio={:.3}",
        runs.len(),
        pass,
        inconclusive,
        fail,
        errors,
        ratio
    );
    detail.push_str(&first_failure(&runs, None));
    outcome(
        4,
        "sentinel_formation",
        ratio >= 0.95 && fail == 0 && errors == 0,
        detail,
    )
}

/// Each edge absent during one block of every cycle of `edge_count + 1`
/// blocks, leaving one block per cycle with every edge present.
pub fn alternating_absence(ring: &RingSpec, block: u64, horizon: u64) -> RemovalMask {
    let m = ring.edge_count() as u64;
    let mut mask = RemovalMask::new();
    let mut b = 0;
    while b * block < horizon {
        let slot = b % (m + 1);
        if slot < m {
            mask.push(EdgeId(slot as usize), b * block..=(b + 1) * block - 1);
        }
        b += 1;
    }
    mask
}

struct SmallRingCase {
    label: String,
    ring: RingSpec,
    k: usize,
    algorithm: Algorithm,
}

fn small_ring_run(case: &SmallRingCase, schedule: &str, seed: u64, horizon: u64) -> Result<u64> {
    let mut cfg = base_config(case.ring.n(), case.k, case.algorithm, seed, horizon);
    cfg.ring.multigraph = case.ring.is_multigraph();
    let resolved = cfg.resolve()?;
    let ring = resolved.ring;
    let mut schedule = match schedule {
        "static" => EdgeSchedule::static_ring(ring),
        "bounded" => EdgeSchedule::new(
            ring,
            ScheduleKind::BoundedRecurrence {
                bound: 8,
                p: 0.5,
                seed,
            },
        )?,
        "alternating_1" => apply_removal(
            EdgeSchedule::static_ring(ring),
            &alternating_absence(&ring, 1, horizon),
        )?,
        "alternating_5" => apply_removal(
            EdgeSchedule::static_ring(ring),
            &alternating_absence(&ring, 5, horizon),
        )?,
        other => unreachable!("unknown small-ring schedule {other}"),
    };
    let mut coverage = CoverageMonitor::new(&ring);
    let options = RunOptions { trace_cap: Some(0) };
    run_with(
        &mut schedule,
        resolved.initial,
        horizon,
        &options,
        &mut [&mut coverage as &mut dyn Monitor],
        None,
    )?;
    let stats = coverage.stats();
    Ok(if stats.visited_nodes().len() == ring.n() {
        stats.max_gap()
    } else {
        u64::MAX
    })
}

pub fn criterion_5_small_rings() -> CriterionOutcome {
    let cases = [
        SmallRingCase {
            label: "pef2 n=3 k=2".into(),
            ring: RingSpec::new(3).expect("valid ring"),
            k: 2,
            algorithm: Algorithm::Pef2,
        },
        SmallRingCase {
            label: "pef1 n=2 k=1 simple".into(),
            ring: RingSpec::with_multigraph(2, false).expect("valid ring"),
            k: 1,
            algorithm: Algorithm::Pef1,
        },
        SmallRingCase {
            label: "pef1 n=2 k=1 multigraph".into(),
            ring: RingSpec::with_multigraph(2, true).expect("valid ring"),
            k: 1,
            algorithm: Algorithm::Pef1,
        },
    ];
    let schedules = ["static", "bounded", "alternating_1", "alternating_5"];
    let jobs: Vec<(usize, &str, u64)> = (0..cases.len())
        .flat_map(|c| {
            schedules
                .iter()
                .flat_map(move |s| (0..50u64).map(move |seed| (c, *s, seed)))
        })
        .collect();
    let results: Vec<(usize, &str, u64, Result<u64>)> = jobs
        .into_par_iter()
        .map(|(c, s, seed)| (c, s, seed, small_ring_run(&cases[c], s, seed, 2_000)))
        .collect();
    let mut worst = 0;
    let mut bad = Vec::new();
    for (c, s, seed, r) in &results {
        match r {
            Ok(gap) if *gap < 50 => worst = worst.max(*gap),
            Ok(gap) => bad.push(format!("{} {s} seed={seed} max_gap={gap}", cases[*c].label)),
            Err(e) => bad.push(format!("{} {s} seed={seed} error={e}", cases[*c].label)),
        }
    }
    let mut detail = format!(
        "runs={} failing={} worst_max_gap={}",
        results.len(),
        bad.len(),
        worst
    );
    if let Some(first) = bad.first() {
        detail.push_str(&format!(" first: {first}"));
    }
    outcome(5, "small_ring_positive", bad.is_empty(), detail)
}

pub fn criterion_6_impossibility() -> CriterionOutcome {
    let mut demos = Vec::new();
    for algorithm in [Algorithm::Pef1, Algorithm::Pef2, Algorithm::Pef3Plus] {
        for n in [3usize, 5, 9] {
            for chirality in ["uniform", "alternating"] {
                demos.push((Impossibility::OneRobot, n, algorithm, chirality));
            }
        }
    }
    for n in [4usize, 8] {
        for chirality in ["uniform", "alternating"] {
            demos.push((Impossibility::TwoRobots, n, Algorithm::Pef3Plus, chirality));
        }
    }
    let results: Vec<(String, std::result::Result<String, String>)> = demos
        .into_par_iter()
        .map(|(which, n, algorithm, chirality)| {
            let label = format!("{which:?} n={n} {algorithm} chirality={chirality}");
            let cfg = demo_config(
                which,
                n,
                100_000,
                algorithm,
                ChiralityPattern::Named(chirality.into()),
                0,
            );
            let limit = match which {
                Impossibility::OneRobot => 2,
                Impossibility::TwoRobots => 3,
            };
            let verdict = demo_impossible(&cfg)
                .map_err(|e| e.to_string())
                .and_then(|s| {
                    let confined = s
                        .report(ConfinementMonitor::NAME)
                        .is_some_and(|r| r.passed());
                    let cs = s.confiner.as_ref().ok_or("no confiner log")?;
                    let finite = cs.stalled || cs.closed_intervals_finite;
                    let note = format!(
                        "visited={} advances={} longest_closed={} stalled={}",
                        s.visited.len(),
                        cs.advances,
                        cs.longest_closed,
                        cs.stalled
                    );
                    if confined && s.visited.len() <= limit && finite {
                        Ok(note)
                    } else {
                        Err(note)
                    }
                });
            (label, verdict)
        })
        .collect();
    let bad: Vec<String> = results
        .iter()
        .filter_map(|(l, r)| r.as_ref().err().map(|e| format!("{l}: {e}")))
        .collect();
    let stalled = results
        .iter()
        .filter(|(_, r)| r.as_ref().is_ok_and(|n| n.ends_with("stalled=true")))
        .count();
    let mut detail = format!(
        "demos={} failing={} stalled={}",
        results.len(),
        bad.len(),
        stalled
    );
    if let Some(first) = bad.first() {
        detail.push_str(&format!(" first: {first}"));
    }
    outcome(6, "impossibility_demos", bad.is_empty(), detail)
}

fn replay_matches(cfg: &ExperimentConfig) -> std::result::Result<bool, String> {
    let mut first = Vec::new();
    let (summary, _) = run_experiment(cfg, Some(&mut first)).map_err(|e| e.to_string())?;
    let replayed = replay_config(&summary.to_toml()).map_err(|e| e.to_string())?;
    let mut second = Vec::new();
    let (again, _) = run_experiment(&replayed, Some(&mut second)).map_err(|e| e.to_string())?;
    Ok(first == second
        && summary.reports == again.reports
        && summary.coverage == again.coverage
        && summary.digest == again.digest
        && !first.is_empty())
}

pub fn criterion_7_determinism() -> CriterionOutcome {
    let mut configs = Vec::new();
    for (i, kind) in [
        ScheduleName::Static,
        ScheduleName::Bernoulli,
        ScheduleName::Bounded,
        ScheduleName::EventualMissing,
    ]
    .into_iter()
    .enumerate()
    {
        let mut cfg = base_config(7, 3, Algorithm::Pef3Plus, 1_000 + i as u64, 2_000);
        cfg.schedule.kind = kind;
        cfg.schedule.edge = Some(EdgeChoice::Named("random".into()));
        cfg.schedule.t_remove = 100;
        cfg.schedule.base = ScheduleName::Bounded;
        cfg.checks.max_tower = true;
        cfg.checks.opposite_dirs = true;
        cfg.checks.min_epochs = Some(5);
        configs.push(cfg);
    }
    // A run whose checks fail: full coverage breaks any three-node confinement.
    let mut failing = base_config(5, 3, Algorithm::Pef3Plus, 77, 2_000);
    failing.schedule.kind = ScheduleName::Bounded;
    failing.checks.confinement = Some(Placement::Explicit(vec![0, 1, 2]));
    configs.push(failing);
    configs.push(demo_config(
        Impossibility::TwoRobots,
        6,
        2_000,
        Algorithm::Pef3Plus,
        ChiralityPattern::Named("alternating".into()),
        2,
    ));
    let results: Vec<std::result::Result<bool, String>> =
        configs.par_iter().map(replay_matches).collect();
    let failing_seen = run_experiment(&configs[4], None).is_ok_and(|(s, _)| !s.passed());
    let ok = results.iter().filter(|r| matches!(r, Ok(true))).count();
    let detail = format!(
        "configs={} identical={} includes_failing_run={}",
        results.len(),
        ok,
        failing_seen
    );
    outcome(
        7,
        "determinism",
        ok == results.len() && failing_seen,
        detail,
    )
}

pub fn golden_trace() -> Result<ExecutionTrace> {
    let ring = RingSpec::new(4)?;
    let initial = init(
        &ring,
        &[NodeId(0), NodeId(1), NodeId(2)],
        &[Chirality::RIGHT_IS_CW; 3],
        Algorithm::Pef3Plus,
    )?;
    run(&mut EdgeSchedule::static_ring(ring), initial, 3)
}

pub fn criterion_8_golden() -> CriterionOutcome {
    match golden_trace() {
        Ok(trace) => {
            let text = trace.to_text();
            let equal = text == GOLDEN_N4_K3_STATIC;
            let detail = if equal {
                "trace matches golden (3 rounds)".to_string()
            } else {
                format!("got:\n{text}expected:\n{GOLDEN_N4_K3_STATIC}")
            };
            outcome(8, "golden_trace", equal, detail)
        }
        Err(e) => outcome(8, "golden_trace", false, e.to_string()),
    }
}

pub fn run_all() -> Vec<CriterionOutcome> {
    vec![
        criterion_1_coverage(),
        criterion_2_tower_bound(),
        criterion_3_opposite_dirs(),
        criterion_4_sentinels(),
        criterion_5_small_rings(),
        criterion_6_impossibility(),
        criterion_7_determinism(),
        criterion_8_golden(),
    ]
}
