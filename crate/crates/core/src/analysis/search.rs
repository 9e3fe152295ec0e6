//! Bounded search for 2-process binary consensus protocols built from fixed
//! `WRN` invocation patterns.
//!
//! A pattern gives each process a fixed sequence of `(object, index)` calls.
//! The value written at step `s` by process `p` with input `x` is the tag
//! `p{p}:{x}:{s}`, so a process's final view holds everything the pattern can
//! tell it. Only the decision function is left free. A decision function
//! solves consensus iff:
//!
//! * both processes of a complete execution decide the same value (equality
//!   edge between their final views),
//! * that value is an input of the execution (domain restriction), and
//! * a process running solo decides its own input (domain restriction).
//!
//! Equality edges are merged with union-find; the pattern is solvable iff
//! every class keeps a nonempty domain.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use serde::{Serialize, Serializer};

use super::AnalysisError;
use crate::objects::{ObjectId, ObjectState, OpRequest, WrnState};
use crate::simulator::{explore_all, run, Action, Pid, ProtocolSpec, ScheduleStep, TaskSpec};
use crate::value::Value;

/// Binary proposal values.
pub const BINARY: [&str; 2] = ["0", "1"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PatternStep {
    pub obj: ObjectId,
    pub index: usize,
}

/// Per-process invocation sequences for the two processes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern(pub [Vec<PatternStep>; 2]);

impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let as_pairs: Vec<Vec<(ObjectId, usize)>> = self
            .0
            .iter()
            .map(|seq| seq.iter().map(|st| (st.obj, st.index)).collect())
            .collect();
        as_pairs.serialize(s)
    }
}

/// A process's complete local state at decision time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ViewKey {
    pub pid: Pid,
    pub input: Value,
    pub responses: Vec<Value>,
}

impl fmt::Display for ViewKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}|{}|{}", self.pid, self.input, self.responses.iter().join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "SOLVABLE")]
    Solvable,
    #[serde(rename = "UNSOLVABLE")]
    Unsolvable,
}

pub type DecisionMap = BTreeMap<ViewKey, Value>;

fn serialize_map<S: Serializer>(map: &Option<Arc<DecisionMap>>, s: S) -> Result<S::Ok, S::Error> {
    match map {
        None => s.serialize_none(),
        Some(m) => s.collect_map(m.iter().map(|(k, v)| (k.to_string(), v))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PatternVerdict {
    pub pattern: Pattern,
    pub verdict: Verdict,
    #[serde(serialize_with = "serialize_map")]
    pub decision_map: Option<Arc<DecisionMap>>,
    pub executions: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub k: usize,
    pub depth: usize,
    pub objects: usize,
    pub complete: bool,
    pub patterns_checked: usize,
    pub solvable: usize,
    pub executions: usize,
    pub verdicts: Vec<PatternVerdict>,
}

impl SearchReport {
    pub fn all_unsolvable(&self) -> bool {
        self.complete && self.solvable == 0
    }
}

fn tag(pid: Pid, input: &Value, step: usize) -> Value {
    Value::token(format!("p{pid}:{input}:{step}"))
}

fn view_key(pid: Pid, input: &Value, responses: impl Iterator<Item = Value>) -> ViewKey {
    ViewKey {
        pid,
        input: input.clone(),
        responses: responses.collect(),
    }
}

/// The protocol a pattern induces. With no decision map every process
/// decides its own input, which is enough to collect final views.
pub fn pattern_protocol(k: usize, objects: usize, pattern: &Pattern, decisions: Option<Arc<DecisionMap>>) -> ProtocolSpec {
    let seqs = pattern.0.clone();
    let longest = seqs.iter().map(Vec::len).max().unwrap_or(0);
    let objs = (0..objects)
        .map(|_| ObjectState::Wrn(WrnState::new(k).expect("k >= 1")))
        .collect();
    ProtocolSpec::new("pattern", 2, objs, longest + 1, move |pid, input, view| {
        let seq = &seqs[pid];
        if view.len() < seq.len() {
            let st = seq[view.len()];
            return Action::Invoke(OpRequest::wrn(st.obj, st.index, tag(pid, input, view.len())));
        }
        let key = view_key(pid, input, view.iter().map(|e| e.resp.clone()));
        let v = decisions.as_ref().and_then(|m| m.get(&key)).cloned();
        Action::Decide(v.unwrap_or_else(|| input.clone()))
    })
    .with_k(k)
    .with_agreement_bound(1)
}

#[derive(Default)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn add(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Final views, co-decision edges and domain restrictions for one pattern.
/// Domains are bitmasks over [`BINARY`].
#[derive(Default)]
pub struct ViewConstraintGraph {
    nodes: HashMap<ViewKey, usize>,
    keys: Vec<ViewKey>,
    domain: Vec<u8>,
    uf: UnionFind,
}

impl ViewConstraintGraph {
    fn node(&mut self, key: ViewKey) -> usize {
        if let Some(&i) = self.nodes.get(&key) {
            return i;
        }
        let i = self.uf.add();
        self.nodes.insert(key.clone(), i);
        self.keys.push(key);
        self.domain.push(0b11);
        i
    }

    fn restrict(&mut self, key: ViewKey, mask: u8) -> usize {
        let i = self.node(key);
        self.domain[i] &= mask;
        i
    }

    fn same(&mut self, a: usize, b: usize) {
        self.uf.union(a, b);
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// A consistent decision map, or `None` if some class has an empty domain.
    pub fn solve(&mut self) -> Option<DecisionMap> {
        let uf = &mut self.uf;
        let mut class_domain: HashMap<usize, u8> = HashMap::new();
        for i in 0..self.keys.len() {
            *class_domain.entry(uf.find(i)).or_insert(0b11) &= self.domain[i];
        }
        if class_domain.values().any(|&d| d == 0) {
            return None;
        }
        let mut map = DecisionMap::new();
        for (i, key) in self.keys.iter().enumerate() {
            let d = class_domain[&uf.find(i)];
            let bit = d.trailing_zeros() as usize;
            map.insert(key.clone(), Value::token(BINARY[bit]));
        }
        Some(map)
    }
}

fn mask_of(v: &Value) -> u8 {
    match v.as_str() {
        Some("0") => 0b01,
        Some("1") => 0b10,
        _ => 0,
    }
}

/// All interleavings of `a` steps of P0 with `b` steps of P1.
fn interleavings(a: usize, b: usize) -> impl Iterator<Item = Vec<ScheduleStep>> {
    (0..a + b).combinations(a).map(move |p0_slots| {
        let mut s = vec![ScheduleStep::new(1); a + b];
        for i in p0_slots {
            s[i] = ScheduleStep::new(0);
        }
        s
    })
}

fn final_view(exec: &crate::simulator::Execution, pid: Pid) -> ViewKey {
    let p = exec.last().process(pid).expect("pid exists");
    view_key(pid, &p.input, p.view.iter().map(|e| e.resp.clone()))
}

/// Builds the constraint graph of `pattern` and solves it.
pub fn evaluate_pattern(k: usize, objects: usize, pattern: &Pattern) -> Result<PatternVerdict, AnalysisError> {
    let proto = pattern_protocol(k, objects, pattern, None);
    let (a, b) = (pattern.0[0].len(), pattern.0[1].len());
    let mut g = ViewConstraintGraph::default();
    let mut executions = 0;
    for (x0, x1) in BINARY.iter().cartesian_product(BINARY.iter()) {
        let inputs = [Value::token(x0), Value::token(x1)];
        let both = mask_of(&inputs[0]) | mask_of(&inputs[1]);
        for schedule in interleavings(a, b) {
            let exec = run(&proto, &inputs, &schedule)?;
            let n0 = g.restrict(final_view(&exec, 0), both);
            let n1 = g.restrict(final_view(&exec, 1), both);
            g.same(n0, n1);
            executions += 1;
        }
        for (pid, len) in [(0, a), (1, b)] {
            let exec = run(&proto, &inputs, &vec![ScheduleStep::new(pid); len])?;
            g.restrict(final_view(&exec, pid), mask_of(&inputs[pid]));
            executions += 1;
        }
    }
    let map = g.solve();
    Ok(PatternVerdict {
        pattern: pattern.clone(),
        verdict: if map.is_some() { Verdict::Solvable } else { Verdict::Unsolvable },
        decision_map: map.map(Arc::new),
        executions,
    })
}

/// Every per-process sequence of length `1..=depth` over `objects` objects.
pub fn sequences(k: usize, depth: usize, objects: usize) -> Vec<Vec<PatternStep>> {
    let steps: Vec<PatternStep> = (0..objects)
        .cartesian_product(0..k)
        .map(|(obj, index)| PatternStep { obj, index })
        .collect();
    (1..=depth)
        .flat_map(|len| (0..len).map(|_| steps.iter().copied()).multi_cartesian_product())
        .collect()
}

/// Evaluates every pattern pair for 2-process binary consensus with
/// sequences of length up to `depth`. Stops once `budget` executions have
/// been simulated and marks the report incomplete.
pub fn solvability_search(k: usize, depth: usize, objects: usize, budget: usize) -> Result<SearchReport, AnalysisError> {
    if k < 2 || depth == 0 || objects == 0 {
        return Err(AnalysisError::InvalidArgument(format!(
            "search needs k >= 2, depth >= 1, objects >= 1 (got k={k}, depth={depth}, objects={objects})"
        )));
    }
    let seqs = sequences(k, depth, objects);
    let mut report = SearchReport {
        k,
        depth,
        objects,
        complete: true,
        patterns_checked: 0,
        solvable: 0,
        executions: 0,
        verdicts: Vec::new(),
    };
    for (p, q) in seqs.iter().cartesian_product(seqs.iter()) {
        if report.executions >= budget {
            report.complete = false;
            break;
        }
        let verdict = evaluate_pattern(k, objects, &Pattern([p.clone(), q.clone()]))?;
        report.patterns_checked += 1;
        report.executions += verdict.executions;
        if verdict.verdict == Verdict::Solvable {
            report.solvable += 1;
        }
        report.verdicts.push(verdict);
    }
    Ok(report)
}

/// Installs a SOLVABLE verdict's decision map and checks agreement and
/// validity on every execution for every binary input pair.
pub fn replay_witness(k: usize, objects: usize, verdict: &PatternVerdict, budget: usize) -> Result<bool, AnalysisError> {
    let Some(map) = verdict.decision_map.clone() else {
        return Ok(false);
    };
    let proto = pattern_protocol(k, objects, &verdict.pattern, Some(map));
    for (x0, x1) in BINARY.iter().cartesian_product(BINARY.iter()) {
        let inputs = [Value::token(x0), Value::token(x1)];
        let task = TaskSpec { agreement_bound: Some(1) };
        let ex = explore_all(&proto, &inputs, &task, budget)?;
        if !ex.is_clean() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(p: usize, q: usize) -> Pattern {
        Pattern([vec![PatternStep { obj: 0, index: p }], vec![PatternStep { obj: 0, index: q }]])
    }

    #[test]
    fn sequence_counts() {
        assert_eq!(sequences(3, 1, 1).len(), 3);
        assert_eq!(sequences(3, 2, 1).len(), 12);
        assert_eq!(sequences(2, 2, 2).len(), 4 + 16);
    }

    #[test]
    fn interleaving_counts() {
        assert_eq!(interleavings(2, 2).count(), 6);
        assert_eq!(interleavings(1, 0).count(), 1);
    }

    #[test]
    fn wrn2_opposite_indices_solvable() {
        let v = evaluate_pattern(2, 1, &single(0, 1)).unwrap();
        assert_eq!(v.verdict, Verdict::Solvable);
        assert!(replay_witness(2, 1, &v, 10_000).unwrap());
    }

    #[test]
    fn wrn2_same_index_unsolvable() {
        assert_eq!(evaluate_pattern(2, 1, &single(0, 0)).unwrap().verdict, Verdict::Unsolvable);
    }

    #[test]
    fn wrn3_single_step_unsolvable() {
        for (p, q) in (0..3).cartesian_product(0..3) {
            assert_eq!(evaluate_pattern(3, 1, &single(p, q)).unwrap().verdict, Verdict::Unsolvable);
        }
    }

    #[test]
    fn search_argument_checks() {
        assert!(solvability_search(3, 0, 1, 100).is_err());
        assert!(solvability_search(1, 1, 1, 100).is_err());
    }

    #[test]
    fn search_budget_flags_partial() {
        let r = solvability_search(3, 2, 1, 10).unwrap();
        assert!(!r.complete);
        assert!(!r.all_unsolvable());
    }

    #[test]
    fn verdict_json() {
        let v = evaluate_pattern(2, 1, &single(0, 1)).unwrap();
        let j = serde_json::to_value(&v).unwrap();
        assert_eq!(j["verdict"], "SOLVABLE");
        assert_eq!(j["pattern"], serde_json::json!([[[0, 0]], [[0, 1]]]));
        assert!(j["decision_map"].is_object());
        let u = evaluate_pattern(2, 1, &single(0, 0)).unwrap();
        assert!(serde_json::to_value(&u).unwrap()["decision_map"].is_null());
    }
}
