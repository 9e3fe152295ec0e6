use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Execution, Pid, Violation};
use crate::objects::{ObjectId, Op};
use crate::value::Value;

/// A shared-memory event in a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub pid: Pid,
    pub obj: ObjectId,
    pub req: Op,
    pub resp: Value,
}

/// JSON document describing one execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub protocol: String,
    pub k: usize,
    pub inputs: Vec<Value>,
    pub schedule: Vec<Pid>,
    /// Nondeterministic branch choices, present only when some are nonzero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<Vec<usize>>,
    pub events: Vec<EventRecord>,
    pub decisions: BTreeMap<Pid, Value>,
    pub violations: Vec<Violation>,
}

impl Trace {
    pub fn from_execution(exec: &Execution, violations: Vec<Violation>) -> Self {
        let branches: Vec<usize> = exec.schedule.iter().map(|s| s.branch).collect();
        Trace {
            protocol: exec.protocol.clone(),
            k: exec.k,
            inputs: exec.inputs(),
            schedule: exec.schedule.iter().map(|s| s.pid).collect(),
            branches: branches.iter().any(|&b| b != 0).then_some(branches),
            events: exec
                .steps
                .iter()
                .filter_map(|s| {
                    s.op.as_ref().map(|e| EventRecord {
                        pid: s.pid,
                        obj: e.req.obj,
                        req: e.req.op.clone(),
                        resp: e.resp.clone(),
                    })
                })
                .collect(),
            decisions: exec.decisions(),
            violations,
        }
    }
}
