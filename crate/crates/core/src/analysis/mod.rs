//! Valence analysis, the object-level impossibility cases, and the bounded
//! consensus solvability search.

mod cases;
mod search;
mod valence;

use thiserror::Error;

use crate::simulator::SimError;

pub use cases::{
    check_absorption, check_commutation, exhaustive_case_checks, AbsorptionReport, CaseError, CaseSummary,
    CommutationReport,
};
pub use search::{
    evaluate_pattern, pattern_protocol, replay_witness, sequences, solvability_search, DecisionMap, Pattern,
    PatternStep, PatternVerdict, SearchReport, Verdict, ViewConstraintGraph, ViewKey, BINARY,
};
pub use valence::{classify_valences, find_critical, Valence, ValenceEntry, ValenceMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("configuration graph exceeds the node budget of {budget}")]
    BudgetExceeded { budget: usize },
    #[error("{0}")]
    InvalidArgument(String),
}
