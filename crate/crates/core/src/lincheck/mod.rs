//! Linearizability checking of recorded concurrent histories, plus a
//! threaded harness that produces such histories from real `WRN_k`
//! implementations.

mod checker;
mod harness;
mod history;

use thiserror::Error;

pub use checker::{certify, check_linearizable, check_linearizable_capped, LinVerdict, DEFAULT_MAX_OPS};
pub use harness::{stress_harness, BuggySplit, ConcurrentWrn, HarnessConfig, Implementation, ReferenceAtomic};
pub use history::{Event, History, OpId, OpRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinError {
    #[error("malformed history: {0}")]
    Malformed(String),
    #[error("history has {ops} operations, above the cap of {cap}")]
    TooLong { ops: usize, cap: usize },
    #[error("unknown implementation {0:?} (expected reference-atomic or buggy-split)")]
    UnknownImplementation(String),
}
