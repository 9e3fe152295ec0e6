//! Test-only oracles written independently of the library internals.

#![allow(dead_code)]

use itertools::Itertools;
use wrnlab::lincheck::{Event, History};
use wrnlab::objects::Op;
use wrnlab::Value;

/// Sequential `WRN_k` by last-writer lookup: the response to request `j` is
/// the value of the latest earlier request whose index is `(i_j + 1) mod k`,
/// and cell `c` ends up holding the latest value written to `c`.
pub fn last_writer_oracle(k: usize, reqs: &[(usize, String)]) -> (Vec<Option<String>>, Vec<Option<String>>) {
    let responses = reqs
        .iter()
        .enumerate()
        .map(|(j, (i, _))| {
            let target = (i + 1) % k;
            reqs[..j].iter().rev().find(|(ix, _)| *ix == target).map(|(_, v)| v.clone())
        })
        .collect();
    let cells = (0..k)
        .map(|c| reqs.iter().rev().find(|(ix, _)| *ix == c).map(|(_, v)| v.clone()))
        .collect();
    (cells, responses)
}

pub fn to_value(v: &Option<String>) -> Value {
    match v {
        Some(s) => Value::token(s),
        None => Value::bottom(),
    }
}

struct BruteOp {
    inv: usize,
    res: Option<usize>,
    index: usize,
    value: String,
    resp: Option<Option<String>>,
}

fn brute_ops(history: &History) -> Vec<BruteOp> {
    let mut ops: Vec<(usize, BruteOp)> = Vec::new();
    for (at, ev) in history.events.iter().enumerate() {
        match ev {
            Event::Inv {
                op,
                req: Op::Wrn { index, value },
                ..
            } => ops.push((
                *op,
                BruteOp {
                    inv: at,
                    res: None,
                    index: *index,
                    value: value.as_str().expect("non-bottom argument").to_string(),
                    resp: None,
                },
            )),
            Event::Res { op, val, .. } => {
                let rec = ops.iter_mut().find(|(id, _)| id == op).expect("response to an invoked op");
                rec.1.res = Some(at);
                rec.1.resp = Some(val.as_str().map(str::to_string));
            }
            Event::Inv { .. } => panic!("brute-force oracle handles WRN histories only"),
        }
    }
    ops.into_iter().map(|(_, o)| o).collect()
}

/// Linearizability of a `WRN_k` history by enumerating every order of every
/// admissible subset of operations (all completed ones plus any pending
/// ones). Exponential; meant for histories of at most eight operations.
pub fn brute_force_linearizable(history: &History, k: usize) -> bool {
    let ops = brute_ops(history);
    assert!(ops.len() <= 10, "brute force is only for tiny histories");
    let pending: Vec<usize> = (0..ops.len()).filter(|&j| ops[j].res.is_none()).collect();
    let complete: Vec<usize> = (0..ops.len()).filter(|&j| ops[j].res.is_some()).collect();
    for chosen_pending in pending.iter().copied().powerset() {
        let chosen: Vec<usize> = complete.iter().copied().chain(chosen_pending).collect();
        for order in chosen.iter().copied().permutations(chosen.len()) {
            if respects_real_time(&ops, &order) && replays(&ops, &order, k) {
                return true;
            }
        }
    }
    false
}

fn respects_real_time(ops: &[BruteOp], order: &[usize]) -> bool {
    order.iter().enumerate().all(|(pos, &a)| {
        order[pos + 1..]
            .iter()
            .all(|&b| !ops[b].res.is_some_and(|r| r < ops[a].inv))
    })
}

fn replays(ops: &[BruteOp], order: &[usize], k: usize) -> bool {
    let reqs: Vec<(usize, String)> = order.iter().map(|&j| (ops[j].index, ops[j].value.clone())).collect();
    let (_, responses) = last_writer_oracle(k, &reqs);
    order
        .iter()
        .zip(responses)
        .all(|(&j, got)| ops[j].resp.as_ref().is_none_or(|want| *want == got))
}

/// Number of operations (invocations) in a history.
pub fn op_count(history: &History) -> usize {
    history.events.iter().filter(|e| matches!(e, Event::Inv { .. })).count()
}
