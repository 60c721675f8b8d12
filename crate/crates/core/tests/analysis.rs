use std::collections::BTreeSet;

use dynaring::analysis::{
    check_confinement, check_direction_changes, check_max_tower, check_move_legality,
    check_moved_flag, check_sentinels, check_tower_opposite_dirs, coverage, Verdict,
};
use dynaring::config::{ExperimentConfig, ResolvedRun, MAX_SEED};
use dynaring::dynamics::{EdgeSchedule, EdgeSet, OneRobotConfiner, ScheduleKind};
use dynaring::engine::{init, run, step, ExecutionTrace, RoundRecord};
use dynaring::ring::{EdgeId, GlobalDirection, NodeId, RingSpec};
use dynaring::robots::{Algorithm, Chirality, LocalDirection, RobotState};
use dynaring::verify::same_direction_tower_fixture;
use proptest::prelude::*;

fn nodes(ids: &[usize]) -> Vec<NodeId> {
    ids.iter().copied().map(NodeId).collect()
}

/// Full trace for a config given as dotted TOML lines.
fn trace_for(text: &str) -> ExecutionTrace {
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let ResolvedRun {
        initial,
        mut schedule,
        ..
    } = cfg.resolve().unwrap();
    run(&mut schedule, initial, cfg.run.horizon).unwrap()
}

fn random_pef3plus(k: usize, n: usize, seed: u64, horizon: u64, kind: &str) -> ExecutionTrace {
    trace_for(&format!(
        r#"
ring.n = {n}
robots.k = {k}
robots.positions = "random"
robots.chirality = "random"
schedule.kind = "{kind}"
schedule.bound = 8
schedule.seed = {seed}
run.horizon = {horizon}
"#
    ))
}

/// Three robots share node 2 at round 1.
fn three_robot_tower_fixture() -> ExecutionTrace {
    let ring = RingSpec::new(5).unwrap();
    let initial = init(
        &ring,
        &nodes(&[1, 2, 3]),
        &[Chirality::RIGHT_IS_CW; 3],
        Algorithm::Pef3Plus,
    )
    .unwrap();
    let state = |dir| RobotState {
        dir,
        has_moved_previous_step: true,
        chirality: Chirality::RIGHT_IS_CW,
        algorithm: Algorithm::Pef3Plus,
    };
    let rounds = vec![
        RoundRecord {
            round: 0,
            edges: EdgeSet::full(&ring),
            positions: nodes(&[1, 2, 3]),
            states: vec![
                state(LocalDirection::Right),
                state(LocalDirection::Right),
                state(LocalDirection::Left),
            ],
            moved: vec![true, false, true],
        },
        RoundRecord {
            round: 1,
            edges: EdgeSet::empty(&ring),
            positions: nodes(&[2, 2, 2]),
            states: vec![state(LocalDirection::Right); 3],
            moved: vec![false; 3],
        },
    ];
    let mut final_config = initial.clone();
    final_config.positions = nodes(&[2, 2, 2]);
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

#[test]
fn three_co_located_robots_fail_at_that_round() {
    let r = check_max_tower(&three_robot_tower_fixture());
    assert_eq!(r.verdict, Verdict::Fail);
    assert_eq!(r.first_violation, Some(1));
}

#[test]
fn single_robot_traces_have_no_towers() {
    for n in 2..8 {
        let trace = trace_for(&format!(
            "ring.n = {n}\nrobots.k = 1\nrobots.algorithm = \"pef1\"\nschedule.kind = \"bernoulli\"\nrun.horizon = 300\n"
        ));
        assert!(check_max_tower(&trace).passed());
        assert!(check_tower_opposite_dirs(&trace).passed());
    }
}

#[test]
fn hand_built_tower_splits_with_opposite_directions() {
    let ring = RingSpec::new(4).unwrap();
    let initial = init(
        &ring,
        &nodes(&[0, 1]),
        &[Chirality::RIGHT_IS_CCW; 2],
        Algorithm::Pef3Plus,
    )
    .unwrap();
    let mut schedule = dynaring::dynamics::apply_removal(
        EdgeSchedule::static_ring(ring),
        &dynaring::dynamics::RemovalMask::new().remove(EdgeId(1), 0..=0),
    )
    .unwrap();
    let trace = run(&mut schedule, initial, 6).unwrap();
    assert_eq!(trace.rounds[1].positions, nodes(&[1, 1]));
    let dirs: Vec<_> = trace.rounds[1].global_dirs().collect();
    assert_eq!(dirs, vec![GlobalDirection::Ccw, GlobalDirection::Cw]);
    assert!(check_tower_opposite_dirs(&trace).passed());
    assert!(check_max_tower(&trace).passed());
}

#[test]
fn towerless_trace_passes_vacuously() {
    let trace =
        trace_for("ring.n = 6\nrobots.k = 1\nrobots.algorithm = \"pef1\"\nrun.horizon = 50\n");
    assert!(trace.towers.is_empty());
    assert_eq!(check_tower_opposite_dirs(&trace).verdict, Verdict::Pass);
}

#[test]
fn same_direction_pair_is_flagged() {
    let r = check_tower_opposite_dirs(&same_direction_tower_fixture());
    assert_eq!(r.verdict, Verdict::Fail);
    assert_eq!(r.first_violation, Some(1));
    assert!(r
        .to_line()
        .starts_with("inv=opposite_dirs verdict=fail first_violation=1"));
}

#[test]
fn sentinels_form_on_a_missing_edge() {
    let trace = trace_for(
        r#"
ring.n = 6
robots.k = 3
schedule.kind = "eventual_missing"
schedule.edge = 2
schedule.t_remove = 50
schedule.base = "bounded"
schedule.bound = 6
run.horizon = 5000
"#,
    );
    let r = check_sentinels(&trace, EdgeId(2), 50, 1000);
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.witness);
}

#[test]
fn sentinels_are_inconclusive_without_time_to_settle() {
    let text = |t_remove: u64, horizon: u64| {
        format!(
            "ring.n = 6\nrobots.k = 3\nschedule.kind = \"eventual_missing\"\nschedule.edge = 2\nschedule.t_remove = {t_remove}\nschedule.base = \"bounded\"\nrun.horizon = {horizon}\n"
        )
    };
    let never = trace_for(&text(500, 500));
    assert_eq!(
        check_sentinels(&never, EdgeId(2), 500, 10).verdict,
        Verdict::Inconclusive
    );
    let late = trace_for(&text(50, 51));
    assert_eq!(
        check_sentinels(&late, EdgeId(2), 50, 10).verdict,
        Verdict::Inconclusive
    );
}

#[test]
fn static_four_ring_is_covered_from_the_first_round() {
    let trace = trace_for(
        "ring.n = 4\nrobots.k = 3\nrobots.positions = [0, 1, 2]\nrobots.chirality = \"uniform\"\nrun.horizon = 10\n",
    );
    let stats = coverage(&trace);
    assert_eq!(stats.first_full_coverage_round, Some(0));
    assert_eq!(stats.visited_nodes().len(), 4);
}

#[test]
fn pef2_on_three_nodes_completes_many_epochs() {
    let trace =
        trace_for("ring.n = 3\nrobots.k = 2\nrobots.algorithm = \"pef2\"\nrun.horizon = 100\n");
    assert!(coverage(&trace).epochs_completed >= 30);
}

#[test]
fn confined_single_robot_never_completes_an_epoch() {
    for n in [3, 5, 9] {
        let ring = RingSpec::new(n).unwrap();
        let initial = init(
            &ring,
            &nodes(&[0]),
            &[Chirality::RIGHT_IS_CCW],
            Algorithm::Pef1,
        )
        .unwrap();
        let mut schedule = EdgeSchedule::new(
            ring,
            ScheduleKind::OneRobotConfiner(OneRobotConfiner::new(NodeId(0))),
        )
        .unwrap();
        let trace = run(&mut schedule, initial, 2_000).unwrap();
        assert_eq!(coverage(&trace).epochs_completed, 0);
        assert!(check_confinement(&trace, &nodes(&[0, n - 1])).passed());
    }
}

#[test]
fn full_coverage_breaks_any_three_node_confinement() {
    let trace = random_pef3plus(3, 5, 11, 2_000, "bounded");
    for a in 0..5 {
        for b in a + 1..5 {
            for c in b + 1..5 {
                let r = check_confinement(&trace, &nodes(&[a, b, c]));
                assert_eq!(r.verdict, Verdict::Fail, "{{{a},{b},{c}}}");
            }
        }
    }
}

#[test]
fn thousand_randomized_pef3plus_runs_keep_tower_invariants() {
    let mut count = 0;
    for k in 3..=6usize {
        for n in k + 1..=12 {
            for seed in 0..(1000 / 30 + 1) {
                let trace = random_pef3plus(k, n, seed, 1_000, "bounded");
                for r in [
                    check_max_tower(&trace),
                    check_tower_opposite_dirs(&trace),
                    check_moved_flag(&trace),
                    check_move_legality(&trace),
                    check_direction_changes(&trace),
                ] {
                    assert!(
                        r.passed(),
                        "k={k} n={n} seed={seed}: {} {}",
                        r.to_line(),
                        r.witness
                    );
                }
                count += 1;
            }
        }
    }
    assert!(count >= 1000, "{count}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn checkers_are_pure(k in 3usize..6, extra in 1usize..6, seed in 0..MAX_SEED) {
        let trace = random_pef3plus(k, k + extra, seed, 300, "bernoulli");
        prop_assert_eq!(check_max_tower(&trace), check_max_tower(&trace));
        prop_assert_eq!(check_tower_opposite_dirs(&trace), check_tower_opposite_dirs(&trace));
        prop_assert_eq!(coverage(&trace), coverage(&trace));
    }

    #[test]
    fn runs_are_deterministic(k in 3usize..6, extra in 1usize..6, seed in 0..MAX_SEED) {
        let a = random_pef3plus(k, k + extra, seed, 300, "bounded");
        let b = random_pef3plus(k, k + extra, seed, 300, "bounded");
        prop_assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn towerless_runs_keep_their_headings(k in 3usize..5, extra in 1usize..8, seed in 0..MAX_SEED) {
        let trace = random_pef3plus(k, k + extra, seed, 200, "bernoulli");
        if trace.towers.is_empty() {
            let first: Vec<_> = trace.rounds[0].global_dirs().collect();
            for r in &trace.rounds {
                prop_assert_eq!(r.global_dirs().collect::<Vec<_>>(), first.clone());
            }
        }
        prop_assert!(check_direction_changes(&trace).passed());
    }

    #[test]
    fn epochs_never_decrease_with_the_horizon(seed in 0..MAX_SEED, cut in 1u64..400) {
        let trace = random_pef3plus(3, 7, seed, 400, "bounded");
        let mut prefix = trace.clone();
        prefix.rounds.truncate(cut as usize);
        prefix.horizon = cut;
        prefix.final_config.positions = trace.positions_after(cut as usize - 1).to_vec();
        prefix.final_config.round = cut;
        prop_assert!(coverage(&prefix).epochs_completed <= coverage(&trace).epochs_completed);
    }

    #[test]
    fn tower_records_never_overlap_comparably(seed in 0..MAX_SEED, extra in 1usize..6) {
        let trace = random_pef3plus(4, 4 + extra, seed, 500, "bernoulli");
        for (i, a) in trace.towers.iter().enumerate() {
            for b in &trace.towers[i + 1..] {
                if a.node != b.node {
                    continue;
                }
                let (sa, sb): (BTreeSet<_>, BTreeSet<_>) =
                    (a.members.iter().collect(), b.members.iter().collect());
                let comparable = sa.is_subset(&sb) || sb.is_subset(&sa);
                let a_end = a.end_round;
                let b_end = b.end_round;
                let overlap = a.start_round <= b_end && b.start_round <= a_end;
                prop_assert!(!(comparable && overlap), "{:?} vs {:?}", a, b);
            }
        }
    }

    #[test]
    fn moved_flag_matches_the_engine(k in 3usize..6, extra in 1usize..6, seed in 0..MAX_SEED) {
        let trace = random_pef3plus(k, k + extra, seed, 200, "bernoulli");
        for (i, r) in trace.rounds.iter().enumerate().skip(1) {
            let prev = &trace.rounds[i - 1];
            let stepped = step(&trace.ring, &dynaring::engine::Configuration {
                positions: r.positions.clone(),
                states: prev.states.clone(),
                round: r.round,
            }, &r.edges);
            prop_assert_eq!(&stepped.record.states, &r.states);
            for (s, m) in prev.states.iter().zip(&prev.moved) {
                prop_assert_eq!(s.has_moved_previous_step, *m);
            }
        }
    }
}
