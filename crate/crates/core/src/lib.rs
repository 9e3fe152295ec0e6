//! A laboratory for Write-and-Read-Next (`WRN_k`) shared objects.
//!
//! `WRN(i, v)` writes `v` into cell `i` of a `k`-cell array and returns what
//! was last written into cell `(i + 1) mod k`, or ⊥. For `k >= 3` the object
//! solves `(k, k-1)`-set consensus yet cannot solve 2-process consensus; this
//! crate implements the protocols that show the first half and the model
//! checking, valence analysis and linearizability checking that exercise the
//! second.

pub mod analysis;
pub mod cli;
pub mod lincheck;
pub mod objects;
pub mod protocols;
pub mod simulator;
pub mod value;

pub use value::Value;
