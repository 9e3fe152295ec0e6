mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use wrnlab::objects::{ObjectState, Op, SetConsensusState, WrnState};
use wrnlab::Value;

use common::{last_writer_oracle, to_value};

fn requests() -> impl Strategy<Value = (usize, Vec<(usize, String)>)> {
    (1usize..=8).prop_flat_map(|k| {
        let req = (0..k, "[a-e]{1,2}");
        (Just(k), prop::collection::vec(req, 0..=10))
    })
}

fn cells(k: usize) -> impl Strategy<Value = Vec<Value>> {
    prop::collection::vec(prop_oneof![Just(Value::bottom()), "[xy]".prop_map(Value::token)], k)
}

proptest! {
    #[test]
    fn matches_last_writer_oracle((k, reqs) in requests()) {
        let mut state = WrnState::new(k).unwrap();
        let (cells, responses) = last_writer_oracle(k, &reqs);
        for ((i, v), want) in reqs.iter().zip(&responses) {
            prop_assert_eq!(state.apply_mut(*i, &Value::token(v)).unwrap(), to_value(want));
        }
        let want: Vec<Value> = cells.iter().map(to_value).collect();
        prop_assert_eq!(state.cells(), &want[..]);
    }

    #[test]
    fn apply_is_deterministic(k in 1usize..=6, pre in cells(6), i in 0usize..6, v in "[a-c]") {
        let s = WrnState::from_cells(pre[..k].to_vec()).unwrap();
        let i = i % k;
        let v = Value::token(v);
        prop_assert_eq!(s.apply(i, &v).unwrap(), s.apply(i, &v).unwrap());
    }

    #[test]
    fn writes_only_its_cell(k in 1usize..=6, pre in cells(6), i in 0usize..6, v in "[a-c]") {
        let s = WrnState::from_cells(pre[..k].to_vec()).unwrap();
        let i = i % k;
        let (next, resp) = s.apply(i, &Value::token(&v)).unwrap();
        for c in 0..k {
            let want = if c == i { Value::token(&v) } else { s.cells()[c].clone() };
            prop_assert_eq!(&next.cells()[c], &want);
        }
        prop_assert_eq!(resp, s.cells()[(i + 1) % k].clone());
    }

    #[test]
    fn response_ignores_own_argument(k in 2usize..=6, pre in cells(6), i in 0usize..6, a in "[a-c]", b in "[d-f]") {
        let s = WrnState::from_cells(pre[..k].to_vec()).unwrap();
        let i = i % k;
        prop_assert_eq!(s.apply(i, &Value::token(a)).unwrap().1, s.apply(i, &Value::token(b)).unwrap().1);
    }

    #[test]
    fn set_consensus_outcomes((n, k) in (2usize..=5).prop_flat_map(|n| (Just(n), 1..n)), proposals in prop::collection::vec("[a-f]", 1..8), picks in prop::collection::vec(any::<prop::sample::Index>(), 8)) {
        let mut state = SetConsensusState::new(n, k).unwrap();
        for (j, p) in proposals.iter().enumerate() {
            let v = Value::token(p);
            let outcomes = state.propose(&v).unwrap();
            prop_assert!(!outcomes.is_empty());
            for (next, resp) in &outcomes {
                prop_assert!(next.chosen().len() <= k);
                if state.count() >= n {
                    prop_assert!(resp.is_bottom());
                    prop_assert_eq!(next, &state);
                } else {
                    prop_assert!(next.chosen().contains(resp));
                    prop_assert!(*resp == v || state.chosen().contains(resp));
                }
            }
            state = outcomes[picks[j].index(outcomes.len())].0.clone();
        }
    }
}

#[test]
fn two_cell_walkthrough() {
    let mut s = WrnState::new(2).unwrap();
    assert!(s.apply_mut(0, &"a".into()).unwrap().is_bottom());
    assert_eq!(s.apply_mut(1, &"b".into()).unwrap(), Value::token("a"));
    assert_eq!(s.apply_mut(0, &"c".into()).unwrap(), Value::token("b"));
}

#[test]
fn one_cell_is_swap() {
    let mut s = WrnState::new(1).unwrap();
    assert!(s.apply_mut(0, &"a".into()).unwrap().is_bottom());
    assert_eq!(s.apply_mut(0, &"b".into()).unwrap(), Value::token("a"));
    assert_eq!(s.cells(), &[Value::token("b")]);
}

#[test]
fn bad_requests_are_rejected() {
    assert!(WrnState::new(0).is_err());
    let s = WrnState::new(3).unwrap();
    assert!(s.apply(3, &"a".into()).is_err());
    assert!(s.apply(0, &Value::bottom()).is_err());
    assert!(SetConsensusState::new(2, 3).is_err());
}

#[test]
fn set_consensus_first_proposal_returns_itself() {
    let s = SetConsensusState::new(3, 2).unwrap();
    let outcomes = s.propose(&"a".into()).unwrap();
    let responses: BTreeSet<Value> = outcomes.iter().map(|(_, r)| r.clone()).collect();
    assert_eq!(responses, BTreeSet::from([Value::token("a")]));
}

#[test]
fn object_state_dispatch() {
    let s = ObjectState::Wrn(WrnState::new(2).unwrap());
    let op = Op::Wrn {
        index: 1,
        value: "z".into(),
    };
    assert_eq!(s.outcome_count(&op).unwrap(), 1);
    assert!(s.outcomes(&Op::Read).is_err());
}
