use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use wrnlab::analysis::{
    check_absorption, check_commutation, classify_valences, evaluate_pattern, exhaustive_case_checks, find_critical,
    pattern_protocol, replay_witness, sequences, solvability_search, Pattern, Valence, Verdict, BINARY,
};
use wrnlab::objects::WrnState;
use wrnlab::protocols::{alg2_protocol, alg4_protocol};
use wrnlab::simulator::{run, schedule_of};
use wrnlab::Value;

fn bits(a: &str, b: &str) -> [Value; 2] {
    [Value::token(a), Value::token(b)]
}

#[test]
fn alg4_valences() {
    let proto = alg4_protocol();
    let map = classify_valences(&proto, &bits("0", "1"), 1000).unwrap();
    assert_eq!(map.initial(), &Valence::Bivalent);
    let entries = map.entries();
    let root = entries.iter().find(|e| e.schedule.is_empty()).unwrap();
    assert!(root.critical);
    let after = |s: &[usize]| entries.iter().find(|e| e.schedule == s).unwrap().valence.clone();
    assert_eq!(after(&[0]), Valence::Univalent(Value::token("0")));
    assert_eq!(after(&[1]), Valence::Univalent(Value::token("1")));
    assert_eq!(find_critical(&proto, &bits("0", "1"), 1000).unwrap().len(), 1);

    let same = classify_valences(&proto, &bits("1", "1"), 1000).unwrap();
    assert_eq!(same.initial(), &Valence::Univalent(Value::token("1")));
    assert!(same.critical_nodes().is_empty());
}

#[test]
fn valence_budget_is_reported() {
    let proto = alg2_protocol(5).unwrap();
    let ins: Vec<Value> = (0..5).map(|i| Value::token(i.to_string())).collect();
    assert!(classify_valences(&proto, &ins, 3).is_err());
}

#[test]
fn valence_display() {
    assert_eq!(Valence::Univalent(Value::token("0")).to_string(), "0-valent");
    assert_eq!(Valence::Bivalent.to_string(), "bivalent");
}

#[test]
fn two_cell_commutation_depends_both_ways() {
    let s = WrnState::new(2).unwrap();
    let r = check_commutation(&s, 0, &"p".into(), 1, &"q".into()).unwrap();
    assert!(r.states_equal);
    assert!(!r.p_independent && !r.q_independent);
    let summary = exhaustive_case_checks(2).unwrap();
    assert!(summary.both_dependent.contains(&(0, 1)));
    assert!(!summary.one_side_independent);
}

#[test]
fn three_cell_cases_are_clean() {
    let summary = exhaustive_case_checks(3).unwrap();
    assert!(summary.is_clean());
    assert!(summary.one_side_independent);
    let s = WrnState::new(3).unwrap();
    let r = check_commutation(&s, 0, &"p".into(), 1, &"q".into()).unwrap();
    assert!(!r.p_independent && r.q_independent);
    assert!(check_absorption(&s, 2, &"p".into(), &"q".into()).unwrap().holds);
    assert!(check_commutation(&s, 1, &"p".into(), 1, &"q".into()).is_err());
}

type FinalView = (usize, Value, Value);
type Run = (bool, [Value; 2], BTreeMap<usize, FinalView>);

/// Final views of every process that decides, for each execution of a
/// depth-1 pattern: both full orders and both solo runs.
fn depth_one_runs(k: usize, pattern: &Pattern) -> Vec<Run> {
    let proto = pattern_protocol(k, 1, pattern, None);
    let mut out = Vec::new();
    for (a, b) in BINARY.iter().cartesian_product(BINARY.iter()) {
        let ins = bits(a, b);
        for (order, full) in [(vec![0, 1], true), (vec![1, 0], true), (vec![0], false), (vec![1], false)] {
            let exec = run(&proto, &ins, &schedule_of(&order)).unwrap();
            let views = order
                .iter()
                .map(|&p| {
                    let st = exec.last().process(p).unwrap();
                    (p, (p, st.input.clone(), st.view[0].resp.clone()))
                })
                .collect();
            out.push((full, ins.clone(), views));
        }
    }
    out
}

/// Tries every assignment of a binary decision to every distinct final view.
fn brute_force_solvable(k: usize, pattern: &Pattern) -> bool {
    let runs = depth_one_runs(k, pattern);
    let views: Vec<FinalView> = runs
        .iter()
        .flat_map(|(_, _, v)| v.values().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(views.len() <= 16);
    (0..1u32 << views.len()).any(|assign| {
        let decide = |view: &FinalView| {
            let j = views.iter().position(|v| v == view).unwrap();
            Value::token(BINARY[(assign >> j & 1) as usize])
        };
        runs.iter().all(|(full, ins, vs)| {
            let ds: Vec<Value> = vs.values().map(decide).collect();
            let valid = vs.iter().all(|(&p, view)| if *full { ins.contains(&decide(view)) } else { decide(view) == ins[p] });
            valid && ds.iter().all_equal()
        })
    })
}

#[test]
fn depth_one_verdicts_match_brute_force() {
    for k in 2..=4 {
        for (p, q) in sequences(k, 1, 1).into_iter().cartesian_product(sequences(k, 1, 1)) {
            let pattern = Pattern([p, q]);
            let verdict = evaluate_pattern(k, 1, &pattern).unwrap();
            let expected = brute_force_solvable(k, &pattern);
            assert_eq!(verdict.verdict == Verdict::Solvable, expected, "k={k} {pattern:?}");
        }
    }
}

#[test]
fn two_cell_depth_one_has_exactly_the_crossing_witnesses() {
    let report = solvability_search(2, 1, 1, 1_000_000).unwrap();
    assert!(report.complete);
    let solvable: Vec<_> = report
        .verdicts
        .iter()
        .filter(|v| v.verdict == Verdict::Solvable)
        .map(|v| (v.pattern.0[0][0].index, v.pattern.0[1][0].index))
        .collect();
    assert_eq!(solvable, vec![(0, 1), (1, 0)]);
    for v in report.verdicts.iter().filter(|v| v.verdict == Verdict::Solvable) {
        assert!(replay_witness(2, 1, v, 1_000_000).unwrap());
    }
}

#[test]
fn three_cell_depth_one_is_unsolvable() {
    let report = solvability_search(3, 1, 1, 1_000_000).unwrap();
    assert!(report.all_unsolvable());
    assert_eq!(report.patterns_checked, 9);
}

#[test]
fn search_rejects_bad_arguments() {
    assert!(solvability_search(1, 1, 1, 10).is_err());
    assert!(solvability_search(3, 0, 1, 10).is_err());
    assert!(solvability_search(3, 1, 0, 10).is_err());
}
