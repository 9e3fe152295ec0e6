//! Object-level facts behind the two cases of the 2-process impossibility
//! argument for `WRN_k`, `k >= 3`.
//!
//! * Absorption: two `WRN` calls with the same index `i`, where `P`'s call
//!   comes last, leave the object exactly as `P`'s call alone would, and `P`
//!   sees the same response. A solo run of `P` cannot tell the difference.
//! * Commutation: calls with different indices commute on the final state.
//!   `P`'s response is order independent exactly when `i_Q != i_P + 1 mod k`
//!   (given the cell `P` reads does not already hold `v_Q`). For `k >= 3` at
//!   least one of the two processes is always order independent; for `k = 2`
//!   neither is.

use itertools::Itertools;
use serde::Serialize;

use crate::objects::{wrn_apply, ObjectError, WrnState};
use crate::value::Value;

#[derive(Debug, Clone, Serialize)]
pub struct AbsorptionReport {
    pub k: usize,
    pub index: usize,
    pub pre: Vec<Value>,
    /// State after `P` alone, and after `Q` then `P`.
    pub state_alone: Vec<Value>,
    pub state_after_q: Vec<Value>,
    pub response_alone: Value,
    pub response_after_q: Value,
    pub holds: bool,
}

pub fn check_absorption(state: &WrnState, index: usize, v_p: &Value, v_q: &Value) -> Result<AbsorptionReport, ObjectError> {
    let (alone, r_alone) = wrn_apply(state, index, v_p)?;
    let (mid, _) = wrn_apply(state, index, v_q)?;
    let (after_q, r_after_q) = wrn_apply(&mid, index, v_p)?;
    Ok(AbsorptionReport {
        k: state.k(),
        index,
        pre: state.cells().to_vec(),
        holds: alone == after_q && r_alone == r_after_q,
        state_alone: alone.cells().to_vec(),
        state_after_q: after_q.cells().to_vec(),
        response_alone: r_alone,
        response_after_q: r_after_q,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutationReport {
    pub k: usize,
    pub i_p: usize,
    pub i_q: usize,
    pub pre: Vec<Value>,
    pub states_equal: bool,
    /// Whether each process sees the same response in both orders.
    pub p_independent: bool,
    pub q_independent: bool,
    /// The index predicate: `P` is order independent iff `i_Q != i_P + 1`.
    pub p_predicted: bool,
    pub q_predicted: bool,
    /// Freshness guard: the cell `P` reads does not already hold `v_Q`
    /// (and symmetrically for `Q`). Without it equality may be coincidental.
    pub p_guarded: bool,
    pub q_guarded: bool,
    pub holds: bool,
}

pub fn check_commutation(
    state: &WrnState,
    i_p: usize,
    v_p: &Value,
    i_q: usize,
    v_q: &Value,
) -> Result<CommutationReport, CaseError> {
    if i_p == i_q {
        return Err(CaseError::SameIndex(i_p));
    }
    let k = state.k();
    let (s_p, r_p_first) = wrn_apply(state, i_p, v_p)?;
    let (s_pq, r_q_second) = wrn_apply(&s_p, i_q, v_q)?;
    let (s_q, r_q_first) = wrn_apply(state, i_q, v_q)?;
    let (s_qp, r_p_second) = wrn_apply(&s_q, i_p, v_p)?;

    let states_equal = s_pq == s_qp;
    let p_independent = r_p_first == r_p_second;
    let q_independent = r_q_first == r_q_second;
    let p_predicted = i_q != (i_p + 1) % k;
    let q_predicted = i_p != (i_q + 1) % k;
    let p_guarded = state.cells()[(i_p + 1) % k] != *v_q;
    let q_guarded = state.cells()[(i_q + 1) % k] != *v_p;
    let agrees = |independent: bool, predicted: bool, guarded: bool| {
        if predicted {
            independent
        } else {
            !guarded || !independent
        }
    };
    let holds = states_equal
        && agrees(p_independent, p_predicted, p_guarded)
        && agrees(q_independent, q_predicted, q_guarded);
    Ok(CommutationReport {
        k,
        i_p,
        i_q,
        pre: state.cells().to_vec(),
        states_equal,
        p_independent,
        q_independent,
        p_predicted,
        q_predicted,
        p_guarded,
        q_guarded,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CaseError {
    #[error("commutation needs distinct indices (both are {0})")]
    SameIndex(usize),
    #[error(transparent)]
    Object(#[from] ObjectError),
}

/// Result of checking both cases over every pre-state and argument choice.
#[derive(Debug, Clone, Serialize)]
pub struct CaseSummary {
    pub k: usize,
    pub absorption_checked: usize,
    pub commutation_checked: usize,
    pub counterexamples: Vec<String>,
    /// Index pairs `(i_P, i_Q)` where, under the freshness guard, both
    /// processes observed order-dependent responses.
    pub both_dependent: Vec<(usize, usize)>,
    /// Whether every distinct index pair had some order-independent side.
    pub one_side_independent: bool,
}

impl CaseSummary {
    pub fn is_clean(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Checks absorption and commutation for `WRN_k` over every pre-state with
/// cells in `{⊥, s0, s1}`, every index choice, and arguments drawn from
/// `{p, q, s0}` (so the guard is exercised both ways).
pub fn exhaustive_case_checks(k: usize) -> Result<CaseSummary, CaseError> {
    let cell_alphabet = [Value::bottom(), Value::token("s0"), Value::token("s1")];
    let args = [Value::token("p"), Value::token("q"), Value::token("s0")];
    let mut summary = CaseSummary {
        k,
        absorption_checked: 0,
        commutation_checked: 0,
        counterexamples: Vec::new(),
        both_dependent: Vec::new(),
        one_side_independent: true,
    };
    let mut dependent = vec![vec![(false, false); k]; k];
    for cells in (0..k).map(|_| cell_alphabet.iter().cloned()).multi_cartesian_product() {
        let state = WrnState::from_cells(cells)?;
        for (v_p, v_q) in args.iter().cartesian_product(args.iter()) {
            for i in 0..k {
                let r = check_absorption(&state, i, v_p, v_q)?;
                summary.absorption_checked += 1;
                if !r.holds {
                    summary.counterexamples.push(format!("absorption: {r:?}"));
                }
            }
            for (i_p, i_q) in (0..k).cartesian_product(0..k).filter(|(a, b)| a != b) {
                let r = check_commutation(&state, i_p, v_p, i_q, v_q)?;
                summary.commutation_checked += 1;
                if !r.holds {
                    summary.counterexamples.push(format!("commutation: {r:?}"));
                }
                let d = &mut dependent[i_p][i_q];
                d.0 |= r.p_guarded && !r.p_independent;
                d.1 |= r.q_guarded && !r.q_independent;
            }
        }
    }
    for (i_p, i_q) in (0..k).cartesian_product(0..k).filter(|(a, b)| a != b) {
        let (p_dep, q_dep) = dependent[i_p][i_q];
        if p_dep && q_dep {
            summary.both_dependent.push((i_p, i_q));
            summary.one_side_independent = false;
        }
    }
    Ok(summary)
}
