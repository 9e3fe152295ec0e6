use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::AnalysisError;
use crate::simulator::{Configuration, Pid, ProtocolSpec, StateGraph};
use crate::value::Value;

/// Which decisions remain reachable from a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Valence {
    /// Every maximal execution from here decides this value.
    Univalent(Value),
    /// At least two decision values are reachable.
    Bivalent,
    /// No reachable execution decides anything.
    Undecided,
}

impl Valence {
    fn from_reachable(values: &BTreeSet<Value>) -> Self {
        match values.len() {
            0 => Valence::Undecided,
            1 => Valence::Univalent(values.iter().next().cloned().unwrap()),
            _ => Valence::Bivalent,
        }
    }

    pub fn is_univalent(&self) -> bool {
        matches!(self, Valence::Univalent(_))
    }
}

impl fmt::Display for Valence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valence::Univalent(v) => write!(f, "{v}-valent"),
            Valence::Bivalent => f.write_str("bivalent"),
            Valence::Undecided => f.write_str("undecided"),
        }
    }
}

impl Serialize for Valence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Valence of every reachable configuration, computed by backward induction
/// over the configuration graph.
#[derive(Debug, Clone)]
pub struct ValenceMap {
    graph: StateGraph,
    reachable: Vec<BTreeSet<Value>>,
    labels: Vec<Valence>,
    index: HashMap<Configuration, usize>,
}

/// One row of a printed valence map.
#[derive(Debug, Clone, Serialize)]
pub struct ValenceEntry {
    pub schedule: Vec<Pid>,
    pub valence: Valence,
    pub critical: bool,
}

impl ValenceMap {
    pub fn graph(&self) -> &StateGraph {
        &self.graph
    }

    pub fn get(&self, config: &Configuration) -> Option<&Valence> {
        self.index.get(config).map(|&i| &self.labels[i])
    }

    pub fn label(&self, node: usize) -> &Valence {
        &self.labels[node]
    }

    pub fn initial(&self) -> &Valence {
        &self.labels[0]
    }

    /// Decision values reachable from `node`.
    pub fn reachable(&self, node: usize) -> &BTreeSet<Value> {
        &self.reachable[node]
    }

    /// Bivalent nodes whose successors are all univalent.
    pub fn critical_nodes(&self) -> Vec<usize> {
        (0..self.graph.len())
            .filter(|&i| {
                let succ = self.graph.successors(i);
                self.labels[i] == Valence::Bivalent
                    && !succ.is_empty()
                    && succ.iter().all(|e| self.labels[e.target].is_univalent())
            })
            .collect()
    }

    pub fn entries(&self) -> Vec<ValenceEntry> {
        let critical: BTreeSet<usize> = self.critical_nodes().into_iter().collect();
        (0..self.graph.len())
            .map(|i| ValenceEntry {
                schedule: self.graph.schedule_to(i).iter().map(|s| s.pid).collect(),
                valence: self.labels[i].clone(),
                critical: critical.contains(&i),
            })
            .collect()
    }
}

/// Labels every configuration reachable from the initial one. Leaves carry
/// the set of values decided in them; inner nodes the union over successors.
pub fn classify_valences(protocol: &ProtocolSpec, inputs: &[Value], budget: usize) -> Result<ValenceMap, AnalysisError> {
    let graph = StateGraph::build(protocol, inputs, budget)?;
    if !graph.is_complete() {
        return Err(AnalysisError::BudgetExceeded { budget });
    }
    let mut reachable = vec![BTreeSet::new(); graph.len()];
    for &i in graph.topological_order().iter().rev() {
        let succ = graph.successors(i);
        reachable[i] = if succ.is_empty() {
            graph.node(i).decisions().into_values().collect()
        } else {
            succ.iter().flat_map(|e| reachable[e.target].iter().cloned()).collect()
        };
    }
    let labels = reachable.iter().map(Valence::from_reachable).collect();
    let index = graph.nodes().iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    Ok(ValenceMap {
        graph,
        reachable,
        labels,
        index,
    })
}

/// Critical configurations of `protocol` on `inputs`.
pub fn find_critical(protocol: &ProtocolSpec, inputs: &[Value], budget: usize) -> Result<Vec<Configuration>, AnalysisError> {
    let map = classify_valences(protocol, inputs, budget)?;
    Ok(map
        .critical_nodes()
        .into_iter()
        .map(|i| map.graph().node(i).clone())
        .collect())
}
