use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Pid, ProtocolSpec, ScheduleStep};
use crate::value::Value;

/// Task properties checked on every finished execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    /// Maximum number of distinct decisions; `None` skips the check.
    pub agreement_bound: Option<usize>,
}

impl TaskSpec {
    /// Consensus protocols (bound 1) always enforce agreement; set-consensus
    /// bounds are only promised for pairwise distinct proposals.
    pub fn for_protocol(protocol: &ProtocolSpec, inputs: &[Value]) -> Self {
        let bound = protocol.agreement_bound();
        let distinct = inputs.iter().collect::<BTreeSet<_>>().len() == inputs.len();
        TaskSpec {
            agreement_bound: (bound == 1 || distinct).then_some(bound),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Validity,
    Agreement,
    WaitFreedom,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Validity => "validity",
            ViolationKind::Agreement => "agreement",
            ViolationKind::WaitFreedom => "wait-freedom",
        })
    }
}

/// A property failure with the schedule that reproduces it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
    pub schedule: Vec<ScheduleStep>,
}

/// Validity (every decision is some input) and the distinct-decision bound.
pub fn check_decisions(inputs: &[Value], decisions: &BTreeMap<Pid, Value>, task: &TaskSpec) -> Vec<(ViolationKind, String)> {
    let mut out = Vec::new();
    for (pid, v) in decisions {
        if !inputs.contains(v) {
            out.push((ViolationKind::Validity, format!("P{pid} decided {v}, which nobody proposed")));
        }
    }
    if let Some(bound) = task.agreement_bound {
        let distinct: BTreeSet<&Value> = decisions.values().collect();
        if distinct.len() > bound {
            out.push((
                ViolationKind::Agreement,
                format!("{} distinct decisions exceed the bound {bound}", distinct.len()),
            ));
        }
    }
    out
}
