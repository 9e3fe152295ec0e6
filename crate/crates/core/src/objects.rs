//! Sequential semantics of the shared objects.
//!
//! Every object state is an immutable value: applying an operation yields a
//! fresh state plus the response. The `*_mut` variants exist for the hot loops
//! of the random scheduler and mutate in place with identical results.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::Value;

/// Index of an object inside a configuration.
pub type ObjectId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObjectError {
    #[error("WRN object arity must be at least 1")]
    ZeroArity,
    #[error("index {index} out of range for WRN_{k}")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("⊥ is not a legal argument")]
    BottomArgument,
    #[error("set consensus object needs 0 < k < n (got n={n}, k={k})")]
    InvalidSetConsensus { n: usize, k: usize },
    #[error("operation {op} is not supported by a {kind} object")]
    Unsupported { op: &'static str, kind: &'static str },
    #[error("branch {branch} out of range ({outcomes} outcomes)")]
    InvalidBranch { branch: usize, outcomes: usize },
}

/// State of a `WRN_k` object: cells `A[0..k-1]`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WrnState {
    cells: Vec<Value>,
}

impl WrnState {
    /// A fresh object with every cell equal to ⊥.
    pub fn new(k: usize) -> Result<Self, ObjectError> {
        if k == 0 {
            return Err(ObjectError::ZeroArity);
        }
        Ok(WrnState {
            cells: vec![Value::bottom(); k],
        })
    }

    pub fn from_cells(cells: Vec<Value>) -> Result<Self, ObjectError> {
        if cells.is_empty() {
            return Err(ObjectError::ZeroArity);
        }
        Ok(WrnState { cells })
    }

    pub fn k(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Value] {
        &self.cells
    }

    /// `WRN(i, v)`: stores `v` in `A[i]` and returns the pre-state content of
    /// `A[(i + 1) mod k]`.
    ///
    /// For `k >= 2` the read cell differs from the written one, so the pre-
    /// and post-state reads coincide. For `k = 1` the object is a swap and
    /// returns the previous content of `A[0]`.
    pub fn apply(&self, index: usize, value: &Value) -> Result<(WrnState, Value), ObjectError> {
        let mut next = self.clone();
        let resp = next.apply_mut(index, value)?;
        Ok((next, resp))
    }

    pub fn apply_mut(&mut self, index: usize, value: &Value) -> Result<Value, ObjectError> {
        let k = self.k();
        if index >= k {
            return Err(ObjectError::IndexOutOfRange { index, k });
        }
        if value.is_bottom() {
            return Err(ObjectError::BottomArgument);
        }
        let resp = self.cells[(index + 1) % k].clone();
        self.cells[index] = value.clone();
        Ok(resp)
    }
}

impl fmt::Debug for WrnState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.cells).finish()
    }
}

/// Free-function form of [`WrnState::apply`].
pub fn wrn_apply(state: &WrnState, index: usize, value: &Value) -> Result<(WrnState, Value), ObjectError> {
    state.apply(index, value)
}

/// A read/write register, initially ⊥.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegisterState {
    cell: Value,
}

impl RegisterState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn read(&self) -> Value {
        self.cell.clone()
    }

    pub fn write(&self, value: Value) -> RegisterState {
        RegisterState { cell: value }
    }
}

/// The nondeterministic `(n, k)`-set consensus object.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetConsensusState {
    n: usize,
    k: usize,
    chosen: BTreeSet<Value>,
    count: usize,
}

impl SetConsensusState {
    pub fn new(n: usize, k: usize) -> Result<Self, ObjectError> {
        if k == 0 || k >= n {
            return Err(ObjectError::InvalidSetConsensus { n, k });
        }
        Ok(SetConsensusState {
            n,
            k,
            chosen: BTreeSet::new(),
            count: 0,
        })
    }

    /// Builds an arbitrary state; used to start from mid-run configurations.
    pub fn with_contents(n: usize, k: usize, chosen: BTreeSet<Value>, count: usize) -> Result<Self, ObjectError> {
        let mut s = Self::new(n, k)?;
        if chosen.len() > k || count > n || chosen.is_empty() != (count == 0) {
            return Err(ObjectError::InvalidSetConsensus { n, k });
        }
        s.chosen = chosen;
        s.count = count;
        Ok(s)
    }

    pub fn chosen(&self) -> &BTreeSet<Value> {
        &self.chosen
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Every legal `(state, response)` outcome of `propose(v)`, in a fixed
    /// order: branches that add `v` first, then the branch that does not,
    /// each listing responses in ascending value order. Never empty.
    pub fn propose(&self, value: &Value) -> Result<Vec<(SetConsensusState, Value)>, ObjectError> {
        if value.is_bottom() {
            return Err(ObjectError::BottomArgument);
        }
        if self.count >= self.n {
            return Ok(vec![(self.clone(), Value::bottom())]);
        }
        let mut sets = Vec::with_capacity(2);
        if self.count == 0 || (self.chosen.len() < self.k && !self.chosen.contains(value)) {
            let mut added = self.chosen.clone();
            added.insert(value.clone());
            sets.push(added);
        }
        if self.count > 0 {
            sets.push(self.chosen.clone());
        }
        let mut out = Vec::new();
        for chosen in sets {
            for resp in &chosen {
                out.push((
                    SetConsensusState {
                        n: self.n,
                        k: self.k,
                        chosen: chosen.clone(),
                        count: self.count + 1,
                    },
                    resp.clone(),
                ));
            }
        }
        Ok(out)
    }
}

/// An operation together with its arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum Op {
    #[serde(rename = "WRN")]
    Wrn { index: usize, value: Value },
    #[serde(rename = "READ")]
    Read,
    #[serde(rename = "WRITE")]
    Write { value: Value },
    #[serde(rename = "PROPOSE")]
    Propose { value: Value },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Wrn { .. } => "WRN",
            Op::Read => "READ",
            Op::Write { .. } => "WRITE",
            Op::Propose { .. } => "PROPOSE",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Wrn { index, value } => write!(f, "WRN({index},{value})"),
            Op::Read => f.write_str("READ()"),
            Op::Write { value } => write!(f, "WRITE({value})"),
            Op::Propose { value } => write!(f, "PROPOSE({value})"),
        }
    }
}

/// An operation addressed to a specific object.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpRequest {
    pub obj: ObjectId,
    #[serde(flatten)]
    pub op: Op,
}

impl OpRequest {
    pub fn wrn(obj: ObjectId, index: usize, value: Value) -> Self {
        OpRequest {
            obj,
            op: Op::Wrn { index, value },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectState {
    Wrn(WrnState),
    Register(RegisterState),
    SetConsensus(SetConsensusState),
}

impl ObjectState {
    pub fn kind(&self) -> &'static str {
        match self {
            ObjectState::Wrn(_) => "WRN",
            ObjectState::Register(_) => "register",
            ObjectState::SetConsensus(_) => "set-consensus",
        }
    }

    fn unsupported(&self, op: &Op) -> ObjectError {
        ObjectError::Unsupported {
            op: op.name(),
            kind: self.kind(),
        }
    }

    /// All legal outcomes of `op`; deterministic objects yield exactly one.
    pub fn outcomes(&self, op: &Op) -> Result<Vec<(ObjectState, Value)>, ObjectError> {
        match (self, op) {
            (ObjectState::Wrn(s), Op::Wrn { index, value }) => {
                let (s, r) = s.apply(*index, value)?;
                Ok(vec![(ObjectState::Wrn(s), r)])
            }
            (ObjectState::Register(s), Op::Read) => Ok(vec![(self.clone(), s.read())]),
            (ObjectState::Register(s), Op::Write { value }) => {
                Ok(vec![(ObjectState::Register(s.write(value.clone())), Value::bottom())])
            }
            (ObjectState::SetConsensus(s), Op::Propose { value }) => Ok(s
                .propose(value)?
                .into_iter()
                .map(|(s, r)| (ObjectState::SetConsensus(s), r))
                .collect()),
            _ => Err(self.unsupported(op)),
        }
    }

    /// Applies the `branch`-th outcome of `op` in place.
    pub fn apply_mut(&mut self, op: &Op, branch: usize) -> Result<Value, ObjectError> {
        match (&mut *self, op) {
            (ObjectState::Wrn(s), Op::Wrn { index, value }) => {
                check_branch(branch, 1)?;
                s.apply_mut(*index, value)
            }
            (ObjectState::Register(s), Op::Read) => {
                check_branch(branch, 1)?;
                Ok(s.read())
            }
            (ObjectState::Register(s), Op::Write { value }) => {
                check_branch(branch, 1)?;
                *s = s.write(value.clone());
                Ok(Value::bottom())
            }
            (ObjectState::SetConsensus(s), Op::Propose { value }) => {
                let mut outs = s.propose(value)?;
                check_branch(branch, outs.len())?;
                let (next, resp) = outs.swap_remove(branch);
                *s = next;
                Ok(resp)
            }
            _ => Err(self.unsupported(op)),
        }
    }

    /// Number of nondeterministic outcomes `op` has from this state.
    pub fn outcome_count(&self, op: &Op) -> Result<usize, ObjectError> {
        match (self, op) {
            (ObjectState::SetConsensus(s), Op::Propose { value }) => Ok(s.propose(value)?.len()),
            _ => self.outcomes(op).map(|o| o.len()),
        }
    }
}

fn check_branch(branch: usize, outcomes: usize) -> Result<(), ObjectError> {
    if branch < outcomes {
        Ok(())
    } else {
        Err(ObjectError::InvalidBranch { branch, outcomes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Value {
        Value::token(s)
    }

    #[test]
    fn wrn3_fresh_returns_bottom() {
        let s = WrnState::new(3).unwrap();
        let (s, r) = wrn_apply(&s, 0, &v("a")).unwrap();
        assert!(r.is_bottom());
        assert_eq!(s.cells(), &[v("a"), Value::bottom(), Value::bottom()]);
    }

    #[test]
    fn wrn3_reads_next_cell_wrapping() {
        let s = WrnState::from_cells(vec![v("a"), Value::bottom(), Value::bottom()]).unwrap();
        let (s, r) = wrn_apply(&s, 2, &v("c")).unwrap();
        assert_eq!(r, v("a"));
        assert_eq!(s.cells(), &[v("a"), Value::bottom(), v("c")]);
    }

    #[test]
    fn wrn1_is_swap() {
        let s = WrnState::new(1).unwrap();
        let (s, r) = wrn_apply(&s, 0, &v("x")).unwrap();
        assert!(r.is_bottom());
        let (s, r) = wrn_apply(&s, 0, &v("y")).unwrap();
        assert_eq!(r, v("x"));
        assert_eq!(s.cells(), &[v("y")]);
    }

    #[test]
    fn wrn_rejects_bad_arguments() {
        let s = WrnState::new(3).unwrap();
        assert_eq!(
            s.apply(3, &v("a")).unwrap_err(),
            ObjectError::IndexOutOfRange { index: 3, k: 3 }
        );
        assert_eq!(s.apply(0, &Value::bottom()).unwrap_err(), ObjectError::BottomArgument);
        assert_eq!(WrnState::new(0).unwrap_err(), ObjectError::ZeroArity);
    }

    #[test]
    fn register_semantics() {
        let r = RegisterState::new();
        assert!(r.read().is_bottom());
        assert_eq!(r.write(v("z")).read(), v("z"));
        assert_eq!(r.write(v("a")).write(v("b")).read(), v("b"));
    }

    #[test]
    fn setcons_first_propose() {
        let s = SetConsensusState::new(3, 2).unwrap();
        let outs = s.propose(&v("a")).unwrap();
        assert_eq!(outs.len(), 1);
        assert_eq!(outs[0].1, v("a"));
        assert_eq!(outs[0].0.chosen().iter().cloned().collect::<Vec<_>>(), vec![v("a")]);
        assert_eq!(outs[0].0.count(), 1);
    }

    #[test]
    fn setcons_second_propose_branches() {
        let s = SetConsensusState::with_contents(3, 2, [v("a")].into(), 1).unwrap();
        let outs: Vec<(Vec<Value>, Value)> = s
            .propose(&v("b"))
            .unwrap()
            .into_iter()
            .map(|(s, r)| (s.chosen().iter().cloned().collect(), r))
            .collect();
        assert_eq!(
            outs,
            vec![
                (vec![v("a"), v("b")], v("a")),
                (vec![v("a"), v("b")], v("b")),
                (vec![v("a")], v("a")),
            ]
        );
    }

    #[test]
    fn setcons_full_set_does_not_grow() {
        let s = SetConsensusState::with_contents(4, 2, [v("a"), v("b")].into(), 2).unwrap();
        let outs = s.propose(&v("c")).unwrap();
        assert_eq!(outs.len(), 2);
        assert!(outs.iter().all(|(s, _)| s.chosen().len() == 2));
    }

    #[test]
    fn setcons_exhausted_returns_bottom() {
        let s = SetConsensusState::with_contents(3, 2, [v("a")].into(), 3).unwrap();
        let outs = s.propose(&v("c")).unwrap();
        assert_eq!(outs, vec![(s.clone(), Value::bottom())]);
    }

    #[test]
    fn setcons_rejects_bad_params() {
        assert!(SetConsensusState::new(2, 2).is_err());
        assert!(SetConsensusState::new(3, 0).is_err());
    }

    #[test]
    fn object_state_dispatch() {
        let w = ObjectState::Wrn(WrnState::new(2).unwrap());
        assert!(w.outcomes(&Op::Read).is_err());
        let mut r = ObjectState::Register(RegisterState::new());
        r.apply_mut(&Op::Write { value: v("q") }, 0).unwrap();
        assert_eq!(r.apply_mut(&Op::Read, 0).unwrap(), v("q"));
        assert!(r.apply_mut(&Op::Read, 1).is_err());
    }

    #[test]
    fn request_json_shape() {
        let req = OpRequest::wrn(0, 1, v("a"));
        let s = serde_json::to_string(&req).unwrap();
        assert_eq!(s, r#"{"obj":0,"op":"WRN","index":1,"value":"a"}"#);
        let back: OpRequest = serde_json::from_str(&s).unwrap();
        assert_eq!(back, req);
    }
}
