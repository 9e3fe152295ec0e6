use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use super::{
    check_decisions, Configuration, Pid, ProtocolSpec, ScheduleStep, SimError, TaskSpec, Violation, ViolationKind,
};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub step: ScheduleStep,
    pub target: usize,
}

/// The reachable configuration graph, deduplicated on full configurations
/// (local views included). Node 0 is the initial configuration. The graph
/// is acyclic because every move increases [`Configuration::progress`].
#[derive(Debug, Clone)]
pub struct StateGraph {
    nodes: Vec<Configuration>,
    edges: Vec<Vec<Edge>>,
    parent: Vec<Option<(usize, ScheduleStep)>>,
    blocked: Vec<(usize, SimError)>,
    complete: bool,
}

impl StateGraph {
    /// Breadth-first construction. Stops adding nodes once `budget` distinct
    /// configurations exist and marks the graph incomplete.
    pub fn build(protocol: &ProtocolSpec, inputs: &[Value], budget: usize) -> Result<Self, SimError> {
        let root = Configuration::initial(protocol, inputs)?;
        let mut g = StateGraph {
            nodes: vec![root.clone()],
            edges: vec![Vec::new()],
            parent: vec![None],
            blocked: Vec::new(),
            complete: true,
        };
        let mut index: HashMap<Configuration, usize> = HashMap::from([(root, 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(at) = queue.pop_front() {
            let pids: Vec<Pid> = g.nodes[at].enabled().collect();
            for pid in pids {
                let branches = match g.nodes[at].branch_count(protocol, pid) {
                    Ok(n) => n,
                    Err(e @ SimError::WaitFreedom { .. }) => {
                        g.blocked.push((at, e));
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                for branch in 0..branches {
                    let child = g.nodes[at].step(protocol, pid, branch)?;
                    let step = ScheduleStep { pid, branch };
                    let target = match index.get(&child) {
                        Some(&t) => t,
                        None => {
                            if g.nodes.len() >= budget {
                                g.complete = false;
                                continue;
                            }
                            let t = g.nodes.len();
                            index.insert(child.clone(), t);
                            g.nodes.push(child);
                            g.edges.push(Vec::new());
                            g.parent.push(Some((at, step)));
                            queue.push_back(t);
                            t
                        }
                    };
                    g.edges[at].push(Edge { step, target });
                }
            }
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn node(&self, i: usize) -> &Configuration {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[Configuration] {
        &self.nodes
    }

    pub fn successors(&self, i: usize) -> &[Edge] {
        &self.edges[i]
    }

    /// Nodes where some process hit its step bound.
    pub fn blocked(&self) -> &[(usize, SimError)] {
        &self.blocked
    }

    /// Nodes with no outgoing move: every maximal execution ends in one.
    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.edges[i].is_empty())
    }

    /// A schedule reaching node `i` from the root.
    pub fn schedule_to(&self, mut i: usize) -> Vec<ScheduleStep> {
        let mut out = Vec::new();
        while let Some((p, step)) = self.parent[i] {
            out.push(step);
            i = p;
        }
        out.reverse();
        out
    }

    /// Node indices ordered so every edge goes forward.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&i| self.nodes[i].progress());
        order
    }

    /// Number of distinct maximal move sequences from the root, saturating.
    pub fn path_count(&self) -> u128 {
        let mut paths = vec![0u128; self.nodes.len()];
        for &i in self.topological_order().iter().rev() {
            paths[i] = if self.edges[i].is_empty() {
                1
            } else {
                self.edges[i]
                    .iter()
                    .fold(0u128, |acc, e| acc.saturating_add(paths[e.target]))
            };
        }
        paths.first().copied().unwrap_or(0)
    }
}

/// One distinct final configuration and a schedule that reaches it.
#[derive(Debug, Clone, Serialize)]
pub struct ExecutionSummary {
    pub schedule: Vec<ScheduleStep>,
    pub decisions: BTreeMap<Pid, Value>,
    pub distinct_decisions: usize,
    pub max_own_steps: usize,
    pub violations: Vec<Violation>,
}

impl ExecutionSummary {
    pub fn is_valid(&self) -> bool {
        !self.violations.iter().any(|v| v.kind == ViolationKind::Validity)
    }

    pub fn is_agreed(&self) -> bool {
        !self.violations.iter().any(|v| v.kind == ViolationKind::Agreement)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Exploration {
    pub protocol: String,
    pub inputs: Vec<Value>,
    pub task: TaskSpec,
    pub nodes: usize,
    /// Distinct maximal move sequences (before deduplication).
    pub paths: u128,
    pub complete: bool,
    pub executions: Vec<ExecutionSummary>,
    pub violations: Vec<Violation>,
    pub max_distinct_decisions: usize,
    pub max_own_steps: usize,
}

impl Exploration {
    pub fn is_clean(&self) -> bool {
        self.complete && self.violations.is_empty()
    }

    /// Distinct decision multisets observed across executions.
    pub fn decision_multisets(&self) -> BTreeSet<Vec<Value>> {
        self.executions
            .iter()
            .map(|e| {
                let mut d: Vec<Value> = e.decisions.values().cloned().collect();
                d.sort();
                d
            })
            .collect()
    }
}

/// Enumerates every maximal execution of `protocol` on `inputs`, covering
/// every interleaving and every nondeterministic outcome, and checks `task`
/// on each. Executions that end in the same configuration are reported once.
pub fn explore_all(protocol: &ProtocolSpec, inputs: &[Value], task: &TaskSpec, budget: usize) -> Result<Exploration, SimError> {
    let graph = StateGraph::build(protocol, inputs, budget)?;
    let mut violations = Vec::new();
    for (node, err) in graph.blocked() {
        violations.push(Violation {
            kind: ViolationKind::WaitFreedom,
            detail: err.to_string(),
            schedule: graph.schedule_to(*node),
        });
    }
    let mut executions = Vec::new();
    for leaf in graph.leaves() {
        let config = graph.node(leaf);
        let schedule = graph.schedule_to(leaf);
        let decisions = config.decisions();
        let found: Vec<Violation> = check_decisions(inputs, &decisions, task)
            .into_iter()
            .map(|(kind, detail)| Violation {
                kind,
                detail,
                schedule: schedule.clone(),
            })
            .collect();
        violations.extend(found.iter().cloned());
        executions.push(ExecutionSummary {
            distinct_decisions: decisions.values().collect::<BTreeSet<_>>().len(),
            max_own_steps: config.processes().iter().map(|p| p.own_steps()).max().unwrap_or(0),
            schedule,
            decisions,
            violations: found,
        });
    }
    Ok(Exploration {
        protocol: protocol.name().to_string(),
        inputs: inputs.to_vec(),
        task: *task,
        nodes: graph.len(),
        paths: graph.path_count(),
        complete: graph.is_complete(),
        max_distinct_decisions: executions.iter().map(|e| e.distinct_decisions).max().unwrap_or(0),
        max_own_steps: executions.iter().map(|e| e.max_own_steps).max().unwrap_or(0),
        executions,
        violations,
    })
}
