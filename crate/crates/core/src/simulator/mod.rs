//! Step-machine execution of protocols over atomic objects.
//!
//! A protocol is a pure function from a process's input and local view (the
//! requests it issued and the responses it got) to its next [`Action`]. The
//! scheduler picks which process moves; a move performs exactly one shared
//! operation atomically. When the operation's response lets the process decide,
//! the decision is recorded in the same move, so a schedule only ever names
//! shared-memory steps (plus a lone decide for processes that decide without
//! touching memory).

mod explore;
mod properties;
mod random;
mod trace;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objects::{ObjectError, ObjectId, ObjectState, OpRequest};
use crate::value::Value;

pub use explore::{explore_all, Edge, ExecutionSummary, Exploration, StateGraph};
pub use properties::{check_decisions, TaskSpec, Violation, ViolationKind};
pub use random::{run_random, run_random_with, RandomReport, TrialOutcome};
pub use trace::{EventRecord, Trace};

pub type Pid = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("protocol has {expected} processes but {got} inputs were given")]
    InputCount { expected: usize, got: usize },
    #[error("input of P{pid} is ⊥")]
    BottomInput { pid: Pid },
    #[error("no process P{0}")]
    UnknownPid(Pid),
    #[error("P{pid} is not running ({status})")]
    NotRunning { pid: Pid, status: String },
    #[error("P{pid}: branch {branch} out of range ({outcomes} outcomes)")]
    InvalidBranch { pid: Pid, branch: usize, outcomes: usize },
    #[error("P{pid} exceeded its step bound of {bound} own steps without deciding")]
    WaitFreedom { pid: Pid, bound: usize },
    #[error("P{pid} addressed unknown object {obj}")]
    UnknownObject { pid: Pid, obj: ObjectId },
    #[error("P{pid}: {source}")]
    Object {
        pid: Pid,
        #[source]
        source: ObjectError,
    },
    #[error("at least one trial is required")]
    NoTrials,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Decided(Value),
    Crashed,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Running => f.write_str("running"),
            Status::Decided(v) => write!(f, "decided {v}"),
            Status::Crashed => f.write_str("crashed"),
        }
    }
}

/// One completed operation in a process's local view.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ViewEntry {
    pub req: OpRequest,
    pub resp: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProcessState {
    pub pid: Pid,
    pub input: Value,
    pub view: Vec<ViewEntry>,
    pub status: Status,
}

impl ProcessState {
    pub fn is_running(&self) -> bool {
        self.status == Status::Running
    }

    pub fn decision(&self) -> Option<&Value> {
        match &self.status {
            Status::Decided(v) => Some(v),
            _ => None,
        }
    }

    /// Shared operations performed, plus one for the decision if taken.
    pub fn own_steps(&self) -> usize {
        self.view.len() + usize::from(self.decision().is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Invoke(OpRequest),
    Decide(Value),
}

type StepFn = dyn Fn(Pid, &Value, &[ViewEntry]) -> Action + Send + Sync;

/// An algorithm under test: object layout, per-process step function, and the
/// own-step bound every process must decide within.
#[derive(Clone)]
pub struct ProtocolSpec {
    name: String,
    k: usize,
    processes: usize,
    objects: Vec<ObjectState>,
    step_bound: usize,
    agreement_bound: usize,
    step_fn: Arc<StepFn>,
}

impl ProtocolSpec {
    pub fn new<F>(name: impl Into<String>, processes: usize, objects: Vec<ObjectState>, step_bound: usize, step_fn: F) -> Self
    where
        F: Fn(Pid, &Value, &[ViewEntry]) -> Action + Send + Sync + 'static,
    {
        ProtocolSpec {
            name: name.into(),
            k: 0,
            processes,
            objects,
            step_bound,
            agreement_bound: processes.max(1),
            step_fn: Arc::new(step_fn),
        }
    }

    /// Records the object arity for reports.
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    /// Maximum number of distinct decisions the protocol promises.
    pub fn with_agreement_bound(mut self, bound: usize) -> Self {
        self.agreement_bound = bound;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn processes(&self) -> usize {
        self.processes
    }

    pub fn objects(&self) -> &[ObjectState] {
        &self.objects
    }

    pub fn step_bound(&self) -> usize {
        self.step_bound
    }

    pub fn agreement_bound(&self) -> usize {
        self.agreement_bound
    }

    pub fn next_action(&self, pid: Pid, input: &Value, view: &[ViewEntry]) -> Action {
        (self.step_fn)(pid, input, view)
    }
}

impl fmt::Debug for ProtocolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProtocolSpec")
            .field("name", &self.name)
            .field("k", &self.k)
            .field("processes", &self.processes)
            .field("objects", &self.objects.len())
            .field("step_bound", &self.step_bound)
            .field("agreement_bound", &self.agreement_bound)
            .finish_non_exhaustive()
    }
}

/// A scheduler decision: which process moves, and which nondeterministic
/// outcome its operation takes (always 0 for deterministic objects).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub pid: Pid,
    pub branch: usize,
}

impl ScheduleStep {
    pub fn new(pid: Pid) -> Self {
        ScheduleStep { pid, branch: 0 }
    }
}

pub type Schedule = Vec<ScheduleStep>;

pub fn schedule_of(pids: &[Pid]) -> Schedule {
    pids.iter().copied().map(ScheduleStep::new).collect()
}

/// What happened in a single move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepEvent {
    pub pid: Pid,
    pub branch: usize,
    pub op: Option<ViewEntry>,
    pub decided: Option<Value>,
}

/// Every process's local state and every object's state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    processes: Vec<ProcessState>,
    objects: Vec<Arc<ObjectState>>,
}

impl Configuration {
    pub fn initial(protocol: &ProtocolSpec, inputs: &[Value]) -> Result<Self, SimError> {
        if inputs.len() != protocol.processes() {
            return Err(SimError::InputCount {
                expected: protocol.processes(),
                got: inputs.len(),
            });
        }
        if let Some(pid) = inputs.iter().position(Value::is_bottom) {
            return Err(SimError::BottomInput { pid });
        }
        Ok(Configuration {
            processes: inputs
                .iter()
                .enumerate()
                .map(|(pid, input)| ProcessState {
                    pid,
                    input: input.clone(),
                    view: Vec::new(),
                    status: Status::Running,
                })
                .collect(),
            objects: protocol.objects().iter().cloned().map(Arc::new).collect(),
        })
    }

    pub fn processes(&self) -> &[ProcessState] {
        &self.processes
    }

    pub fn process(&self, pid: Pid) -> Option<&ProcessState> {
        self.processes.get(pid)
    }

    pub fn object(&self, id: ObjectId) -> Option<&ObjectState> {
        self.objects.get(id).map(|o| &**o)
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    /// Pids that may take a step.
    pub fn enabled(&self) -> impl Iterator<Item = Pid> + '_ {
        self.processes.iter().filter(|p| p.is_running()).map(|p| p.pid)
    }

    pub fn is_terminal(&self) -> bool {
        self.enabled().next().is_none()
    }

    pub fn decisions(&self) -> BTreeMap<Pid, Value> {
        self.processes
            .iter()
            .filter_map(|p| p.decision().map(|v| (p.pid, v.clone())))
            .collect()
    }

    pub fn inputs(&self) -> Vec<Value> {
        self.processes.iter().map(|p| p.input.clone()).collect()
    }

    /// Sum of own steps; strictly increases along every move.
    pub fn progress(&self) -> usize {
        self.processes.iter().map(ProcessState::own_steps).sum()
    }

    /// Stops `pid` for good.
    pub fn crash(&mut self, pid: Pid) -> Result<(), SimError> {
        let p = self.running_mut(pid)?;
        p.status = Status::Crashed;
        Ok(())
    }

    fn running(&self, pid: Pid) -> Result<&ProcessState, SimError> {
        let p = self.processes.get(pid).ok_or(SimError::UnknownPid(pid))?;
        if !p.is_running() {
            return Err(SimError::NotRunning {
                pid,
                status: p.status.to_string(),
            });
        }
        Ok(p)
    }

    fn running_mut(&mut self, pid: Pid) -> Result<&mut ProcessState, SimError> {
        self.running(pid)?;
        Ok(&mut self.processes[pid])
    }

    /// The action `pid` would take next, after checking its step budget.
    fn pending(&self, protocol: &ProtocolSpec, pid: Pid) -> Result<Action, SimError> {
        let p = self.running(pid)?;
        let action = protocol.next_action(pid, &p.input, &p.view);
        if let Action::Invoke(req) = &action {
            // An invocation must leave room for the decision step.
            if p.view.len() + 2 > protocol.step_bound() {
                return Err(SimError::WaitFreedom {
                    pid,
                    bound: protocol.step_bound(),
                });
            }
            if req.obj >= self.objects.len() {
                return Err(SimError::UnknownObject { pid, obj: req.obj });
            }
        }
        Ok(action)
    }

    /// Number of legal branch choices for `pid`'s next move.
    pub fn branch_count(&self, protocol: &ProtocolSpec, pid: Pid) -> Result<usize, SimError> {
        match self.pending(protocol, pid)? {
            Action::Decide(_) => Ok(1),
            Action::Invoke(req) => self.objects[req.obj]
                .outcome_count(&req.op)
                .map_err(|source| SimError::Object { pid, source }),
        }
    }

    /// Pure form of [`Configuration::step_mut`].
    pub fn step(&self, protocol: &ProtocolSpec, pid: Pid, branch: usize) -> Result<Configuration, SimError> {
        let mut next = self.clone();
        next.step_mut(protocol, pid, branch)?;
        Ok(next)
    }

    /// Performs `pid`'s next action atomically. On error the configuration is
    /// left unchanged.
    pub fn step_mut(&mut self, protocol: &ProtocolSpec, pid: Pid, branch: usize) -> Result<StepEvent, SimError> {
        let action = self.pending(protocol, pid)?;
        let req = match action {
            Action::Decide(v) => {
                if branch != 0 {
                    return Err(SimError::InvalidBranch { pid, branch, outcomes: 1 });
                }
                self.processes[pid].status = Status::Decided(v.clone());
                return Ok(StepEvent {
                    pid,
                    branch,
                    op: None,
                    decided: Some(v),
                });
            }
            Action::Invoke(req) => req,
        };
        let resp = {
            let object = Arc::make_mut(&mut self.objects[req.obj]);
            object.apply_mut(&req.op, branch).map_err(|source| match source {
                ObjectError::InvalidBranch { branch, outcomes } => SimError::InvalidBranch { pid, branch, outcomes },
                source => SimError::Object { pid, source },
            })?
        };
        let entry = ViewEntry { req, resp };
        let p = &mut self.processes[pid];
        p.view.push(entry.clone());
        let decided = match protocol.next_action(pid, &p.input, &p.view) {
            Action::Decide(v) => {
                p.status = Status::Decided(v.clone());
                Some(v)
            }
            Action::Invoke(_) => None,
        };
        Ok(StepEvent {
            pid,
            branch,
            op: Some(entry),
            decided,
        })
    }
}

/// A run: the configurations visited and the moves between them.
#[derive(Debug, Clone)]
pub struct Execution {
    pub protocol: String,
    pub k: usize,
    pub schedule: Schedule,
    pub configurations: Vec<Configuration>,
    pub steps: Vec<StepEvent>,
}

impl Execution {
    pub fn initial(&self) -> &Configuration {
        &self.configurations[0]
    }

    pub fn last(&self) -> &Configuration {
        self.configurations.last().expect("execution has an initial configuration")
    }

    pub fn inputs(&self) -> Vec<Value> {
        self.initial().inputs()
    }

    pub fn decisions(&self) -> BTreeMap<Pid, Value> {
        self.last().decisions()
    }

    /// Decisions as a vector indexed by pid; `None` for undecided processes.
    pub fn decision_vec(&self) -> Vec<Option<Value>> {
        self.last().processes().iter().map(|p| p.decision().cloned()).collect()
    }

    /// Pids in the order of their first shared-memory operation.
    pub fn invocation_order(&self) -> Vec<Pid> {
        let mut seen = Vec::new();
        for s in self.steps.iter().filter(|s| s.op.is_some()) {
            if !seen.contains(&s.pid) {
                seen.push(s.pid);
            }
        }
        seen
    }
}

/// Runs `schedule` from the initial configuration. Deterministic in all
/// three arguments.
pub fn run(protocol: &ProtocolSpec, inputs: &[Value], schedule: &[ScheduleStep]) -> Result<Execution, SimError> {
    let mut config = Configuration::initial(protocol, inputs)?;
    let mut configurations = vec![config.clone()];
    let mut steps = Vec::with_capacity(schedule.len());
    for s in schedule {
        steps.push(config.step_mut(protocol, s.pid, s.branch)?);
        configurations.push(config.clone());
    }
    Ok(Execution {
        protocol: protocol.name().to_string(),
        k: protocol.k(),
        schedule: schedule.to_vec(),
        configurations,
        steps,
    })
}

/// Runs `schedule` and then lets each still-running process finish alone,
/// in pid order.
pub fn run_to_completion(protocol: &ProtocolSpec, inputs: &[Value], schedule: &[ScheduleStep]) -> Result<Execution, SimError> {
    let mut full = schedule.to_vec();
    let mut config = Configuration::initial(protocol, inputs)?;
    for s in schedule {
        config.step_mut(protocol, s.pid, s.branch)?;
    }
    for pid in 0..protocol.processes() {
        while config.process(pid).is_some_and(ProcessState::is_running) {
            config.step_mut(protocol, pid, 0)?;
            full.push(ScheduleStep::new(pid));
        }
    }
    run(protocol, inputs, &full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objects::WrnState;

    fn one_shot_wrn(k: usize) -> ProtocolSpec {
        ProtocolSpec::new(
            "one-shot",
            k,
            vec![ObjectState::Wrn(WrnState::new(k).unwrap())],
            2,
            |pid, input, view| match view.first() {
                None => Action::Invoke(OpRequest::wrn(0, pid, input.clone())),
                Some(e) if e.resp.is_bottom() => Action::Decide(input.clone()),
                Some(e) => Action::Decide(e.resp.clone()),
            },
        )
        .with_k(k)
    }

    fn vals(xs: &[&str]) -> Vec<Value> {
        xs.iter().map(Value::token).collect()
    }

    #[test]
    fn step_records_view_and_decides_eagerly() {
        let p = one_shot_wrn(2);
        let c = Configuration::initial(&p, &vals(&["x", "y"])).unwrap();
        let c = c.step(&p, 0, 0).unwrap();
        let p0 = c.process(0).unwrap();
        assert_eq!(p0.view.len(), 1);
        assert_eq!(p0.view[0].req, OpRequest::wrn(0, 0, "x".into()));
        assert!(p0.view[0].resp.is_bottom());
        assert_eq!(p0.decision(), Some(&Value::token("x")));
        assert_eq!(p0.own_steps(), 2);
    }

    #[test]
    fn step_on_decided_process_is_an_error() {
        let p = one_shot_wrn(2);
        let c = Configuration::initial(&p, &vals(&["x", "y"])).unwrap();
        let c = c.step(&p, 0, 0).unwrap();
        assert!(matches!(c.step(&p, 0, 0), Err(SimError::NotRunning { pid: 0, .. })));
        assert_eq!(c.step(&p, 5, 0).unwrap_err(), SimError::UnknownPid(5));
        assert!(matches!(c.step(&p, 1, 1), Err(SimError::InvalidBranch { .. })));
    }

    #[test]
    fn crashed_process_cannot_move() {
        let p = one_shot_wrn(2);
        let mut c = Configuration::initial(&p, &vals(&["x", "y"])).unwrap();
        c.crash(1).unwrap();
        assert!(c.step(&p, 1, 0).is_err());
        assert_eq!(c.enabled().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn input_validation() {
        let p = one_shot_wrn(2);
        assert_eq!(
            Configuration::initial(&p, &vals(&["x"])).unwrap_err(),
            SimError::InputCount { expected: 2, got: 1 }
        );
        assert_eq!(
            Configuration::initial(&p, &[Value::token("x"), Value::bottom()]).unwrap_err(),
            SimError::BottomInput { pid: 1 }
        );
    }

    #[test]
    fn step_bound_is_enforced() {
        let p = ProtocolSpec::new(
            "spin",
            1,
            vec![ObjectState::Wrn(WrnState::new(1).unwrap())],
            3,
            |_, input, _| Action::Invoke(OpRequest::wrn(0, 0, input.clone())),
        );
        let err = run(&p, &vals(&["a"]), &schedule_of(&[0, 0, 0])).unwrap_err();
        assert_eq!(err, SimError::WaitFreedom { pid: 0, bound: 3 });
    }

    #[test]
    fn run_is_deterministic_and_atomic() {
        let p = one_shot_wrn(3);
        let inputs = vals(&["a", "b", "c"]);
        let s = schedule_of(&[2, 1, 0]);
        let e1 = run(&p, &inputs, &s).unwrap();
        let e2 = run(&p, &inputs, &s).unwrap();
        assert_eq!(e1.configurations, e2.configurations);
        assert_eq!(e1.decision_vec(), vec![Some("b".into()), Some("c".into()), Some("c".into())]);
        for w in e1.configurations.windows(2) {
            let changed = (0..w[0].object_count()).filter(|&i| w[0].object(i) != w[1].object(i)).count();
            assert!(changed <= 1);
        }
    }

    #[test]
    fn run_to_completion_finishes_everyone() {
        let p = one_shot_wrn(3);
        let e = run_to_completion(&p, &vals(&["a", "b", "c"]), &schedule_of(&[1])).unwrap();
        assert!(e.last().is_terminal());
        assert_eq!(e.schedule.iter().map(|s| s.pid).collect::<Vec<_>>(), vec![1, 0, 2]);
    }
}
