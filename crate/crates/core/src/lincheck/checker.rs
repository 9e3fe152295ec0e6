use std::collections::HashSet;

use serde::Serialize;

use super::history::{History, OpId, OpRecord};
use super::LinError;
use crate::objects::ObjectState;

/// Histories longer than this are refused unless a larger cap is given.
pub const DEFAULT_MAX_OPS: usize = 24;
const HARD_MAX_OPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinVerdict {
    pub accepted: bool,
    /// Linearization order (op ids) when accepted. Pending operations that
    /// took effect appear in it; the others are dropped.
    pub witness: Option<Vec<OpId>>,
    /// Length (in events) of the shortest non-linearizable prefix when rejected.
    pub violating_prefix: Option<usize>,
    /// Search nodes expanded.
    pub explored: usize,
}

pub fn check_linearizable(history: &History, init: &ObjectState) -> Result<LinVerdict, LinError> {
    check_linearizable_capped(history, init, DEFAULT_MAX_OPS)
}

/// Depth-first search over precedence-respecting orders, memoizing failed
/// `(linearized set, object state)` pairs. Completed operations must all be
/// placed and must reproduce their responses; pending ones may be placed
/// with any response or left out.
pub fn check_linearizable_capped(history: &History, init: &ObjectState, max_ops: usize) -> Result<LinVerdict, LinError> {
    let ops = history.operations()?;
    let cap = max_ops.min(HARD_MAX_OPS);
    if ops.len() > cap {
        return Err(LinError::TooLong { ops: ops.len(), cap });
    }
    let mut search = Search::new(&ops);
    let mut order = Vec::new();
    let found = search.dfs(0, init, &mut order);
    let explored = search.explored;
    if found {
        return Ok(LinVerdict {
            accepted: true,
            witness: Some(order.iter().map(|&i| ops[i].op).collect()),
            violating_prefix: None,
            explored,
        });
    }
    Ok(LinVerdict {
        accepted: false,
        witness: None,
        violating_prefix: Some(shortest_bad_prefix(history, init, &ops)),
        explored,
    })
}

fn shortest_bad_prefix(history: &History, init: &ObjectState, ops: &[OpRecord]) -> usize {
    // Only a response can turn a linearizable prefix into a bad one.
    let mut ends: Vec<usize> = ops.iter().filter_map(|o| o.res_at).map(|r| r + 1).collect();
    ends.sort_unstable();
    for n in ends {
        let prefix = history.prefix(n);
        let prefix_ops = prefix.operations().expect("prefix of a well-formed history");
        let mut s = Search::new(&prefix_ops);
        if !s.dfs(0, init, &mut Vec::new()) {
            return n;
        }
    }
    history.len()
}

struct Search<'a> {
    ops: &'a [OpRecord],
    /// For each op, the ops that must be linearized before it.
    preds: Vec<u64>,
    required: u64,
    failed: HashSet<(u64, ObjectState)>,
    explored: usize,
}

impl<'a> Search<'a> {
    fn new(ops: &'a [OpRecord]) -> Self {
        let preds = ops
            .iter()
            .map(|c| {
                ops.iter()
                    .enumerate()
                    .filter(|(_, d)| d.precedes(c))
                    .fold(0u64, |m, (j, _)| m | (1 << j))
            })
            .collect();
        let required = ops
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_complete())
            .fold(0u64, |m, (j, _)| m | (1 << j));
        Search {
            ops,
            preds,
            required,
            failed: HashSet::new(),
            explored: 0,
        }
    }

    fn dfs(&mut self, done: u64, state: &ObjectState, order: &mut Vec<usize>) -> bool {
        if done & self.required == self.required {
            return true;
        }
        if self.failed.contains(&(done, state.clone())) {
            return false;
        }
        self.explored += 1;
        for c in 0..self.ops.len() {
            let bit = 1u64 << c;
            if done & bit != 0 || self.preds[c] & !done != 0 {
                continue;
            }
            let op = &self.ops[c];
            let Ok(outcomes) = state.outcomes(&op.req) else {
                continue;
            };
            for (next, resp) in outcomes {
                if op.resp.as_ref().is_some_and(|r| *r != resp) {
                    continue;
                }
                order.push(c);
                if self.dfs(done | bit, &next, order) {
                    return true;
                }
                order.pop();
            }
        }
        self.failed.insert((done, state.clone()));
        false
    }
}

/// Replays `witness` through the sequential semantics and checks that every
/// completed operation in it gets its recorded response and that every
/// completed operation appears.
pub fn certify(history: &History, init: &ObjectState, witness: &[OpId]) -> bool {
    let Ok(ops) = history.operations() else {
        return false;
    };
    let mut state = init.clone();
    let mut placed = HashSet::new();
    for id in witness {
        let Some(op) = ops.iter().find(|o| o.op == *id) else {
            return false;
        };
        if !placed.insert(*id) || ops.iter().any(|d| d.precedes(op) && !placed.contains(&d.op)) {
            return false;
        }
        let Ok(outcomes) = state.outcomes(&op.req) else {
            return false;
        };
        let Some((next, _)) = outcomes
            .into_iter()
            .find(|(_, r)| op.resp.as_ref().is_none_or(|want| want == r))
        else {
            return false;
        };
        state = next;
    }
    ops.iter().filter(|o| o.is_complete()).all(|o| placed.contains(&o.op))
}
