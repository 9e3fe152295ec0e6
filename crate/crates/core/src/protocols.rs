//! The WRN-based agreement protocols, expressed as [`ProtocolSpec`]s.
//!
//! * `alg2`: `k` processes with ids `0..k`, one `WRN_k` object. `P_i` calls
//!   `WRN(i, v_i)` and decides the response, or its own input on ⊥. At most
//!   `k - 1` distinct decisions.
//! * `alg4`: the `k = 2` instance, which solves 2-process consensus.
//! * `alg3`: up to `k` participants with names in `0..=2k-2`, one `WRN_k`
//!   object per member of a [`FunctionFamily`], visited in family order.
//! * `grouped`: processes split by ascending pid into groups of at most `k`,
//!   each group running `alg2` on its own object. This is our construction for
//!   the `(n', h)` set-consensus bound with `n'/h = 3/2` at `k = 3`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objects::{ObjectState, OpRequest, WrnState};
use crate::simulator::{Action, ProtocolSpec, ViewEntry};
use crate::value::Value;

/// Largest full family we are willing to materialize.
const MAX_FAMILY: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("{protocol} needs k >= {min} (got {k})")]
    Arity { protocol: &'static str, k: usize, min: usize },
    #[error("{got} participants exceed k = {k}")]
    TooManyParticipants { got: usize, k: usize },
    #[error("at least one participant is required")]
    NoParticipants,
    #[error("participant {0} appears twice")]
    DuplicateParticipant(usize),
    #[error("rename has no name in 0..={max} for participant {name}")]
    RenameOutOfRange { name: usize, max: usize },
    #[error("participants {first} and {second} both rename to {internal}")]
    RenameCollision { first: usize, second: usize, internal: usize },
    #[error("full family for k = {k} has {size} members, too many to enumerate")]
    FamilyTooLarge { k: usize, size: u128 },
    #[error("unknown family mode {0:?} (expected full or covering)")]
    UnknownFamilyMode(String),
}

fn one_shot_step(index: usize, obj: usize) -> impl Fn(&Value, &[ViewEntry]) -> Action {
    move |input, view| match view.first() {
        None => Action::Invoke(OpRequest::wrn(obj, index, input.clone())),
        Some(e) if e.resp.is_bottom() => Action::Decide(input.clone()),
        Some(e) => Action::Decide(e.resp.clone()),
    }
}

fn fresh_wrn(k: usize) -> ObjectState {
    ObjectState::Wrn(WrnState::new(k).expect("k >= 1"))
}

/// `(k-1)`-set consensus for processes `0..k` on a single `WRN_k`.
pub fn alg2_protocol(k: usize) -> Result<ProtocolSpec, ProtocolError> {
    if k < 2 {
        return Err(ProtocolError::Arity { protocol: "alg2", k, min: 2 });
    }
    Ok(ProtocolSpec::new("alg2", k, vec![fresh_wrn(k)], 2, |pid, input, view| {
        one_shot_step(pid, 0)(input, view)
    })
    .with_k(k)
    .with_agreement_bound(k - 1))
}

/// Two-process consensus on a single `WRN_2`.
pub fn alg4_protocol() -> ProtocolSpec {
    ProtocolSpec::new("alg4", 2, vec![fresh_wrn(2)], 2, |pid, input, view| {
        one_shot_step(pid, 0)(input, view)
    })
    .with_k(2)
    .with_agreement_bound(1)
}

/// Pid ranges of the groups used by [`grouped_protocol`].
pub fn groups(k: usize, n: usize) -> Vec<Range<usize>> {
    (0..n).step_by(k.max(1)).map(|start| start..(start + k).min(n)).collect()
}

/// Runs `alg2` independently inside each group of at most `k` processes.
/// Promises at most `sum(min(|group|, k - 1))` distinct decisions.
pub fn grouped_protocol(k: usize, n: usize) -> Result<ProtocolSpec, ProtocolError> {
    if k < 2 {
        return Err(ProtocolError::Arity { protocol: "grouped", k, min: 2 });
    }
    if n == 0 {
        return Err(ProtocolError::NoParticipants);
    }
    let gs = groups(k, n);
    let bound = gs.iter().map(|g| g.len().min(k - 1)).sum();
    let objects = gs.iter().map(|_| fresh_wrn(k)).collect();
    Ok(ProtocolSpec::new("grouped", n, objects, 2, move |pid, input, view| {
        one_shot_step(pid % k, pid / k)(input, view)
    })
    .with_k(k)
    .with_agreement_bound(bound))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyMode {
    /// Every map `{0..2k-2} -> {0..k-1}`.
    Full,
    /// One rank map per `k`-subset of names.
    Covering,
}

impl FromStr for FamilyMode {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(FamilyMode::Full),
            "covering" => Ok(FamilyMode::Covering),
            other => Err(ProtocolError::UnknownFamilyMode(other.to_string())),
        }
    }
}

impl fmt::Display for FamilyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyMode::Full => "full",
            FamilyMode::Covering => "covering",
        })
    }
}

/// An ordered list of index assignments `{0..2k-2} -> {0..k-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionFamily {
    k: usize,
    mode: FamilyMode,
    maps: Vec<Vec<u8>>,
}

/// Builds the family. `Full` lists all `k^(2k-1)` maps in lexicographic order
/// of their value vectors. `Covering` lists, for each `k`-subset `S` in
/// lexicographic order, the map sending `j ∈ S` to its rank in `S` and every
/// other name to 0.
pub fn build_family(k: usize, mode: FamilyMode) -> Result<FunctionFamily, ProtocolError> {
    if k < 3 {
        return Err(ProtocolError::Arity { protocol: "family", k, min: 3 });
    }
    let names = 2 * k - 1;
    let maps = match mode {
        FamilyMode::Full => {
            let size = (k as u128).pow(names as u32);
            if size > MAX_FAMILY as u128 {
                return Err(ProtocolError::FamilyTooLarge { k, size });
            }
            (0..names)
                .map(|_| 0..k as u8)
                .multi_cartesian_product()
                .collect()
        }
        FamilyMode::Covering => (0..names)
            .combinations(k)
            .map(|subset| {
                let mut f = vec![0u8; names];
                for (rank, &j) in subset.iter().enumerate() {
                    f[j] = rank as u8;
                }
                f
            })
            .collect(),
    };
    Ok(FunctionFamily { k, mode, maps })
}

impl FunctionFamily {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> FamilyMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Highest legal internal name, `2k - 2`.
    pub fn max_name(&self) -> usize {
        2 * self.k - 2
    }

    pub fn map(&self, l: usize) -> &[u8] {
        &self.maps[l]
    }

    pub fn apply(&self, l: usize, name: usize) -> usize {
        self.maps[l][name] as usize
    }

    /// First member that maps `names` bijectively onto `0..k`.
    pub fn covering_index(&self, names: &[usize]) -> Option<usize> {
        if names.len() != self.k {
            return None;
        }
        self.maps.iter().position(|f| {
            let image: BTreeSet<u8> = names.iter().map(|&j| f[j]).collect();
            image.len() == self.k
        })
    }

    /// Whether every `k`-subset of names has a covering member.
    pub fn has_covering_property(&self) -> bool {
        (0..=self.max_name())
            .combinations(self.k)
            .all(|s| self.covering_index(&s).is_some())
    }
}

/// Maps external process names to internal names in `0..=2k-2`.
pub trait Rename: Send + Sync {
    fn rename(&self, external: usize) -> Option<usize>;
}

/// Identity renaming; only accepts names already in `0..=2k-2`.
#[derive(Debug, Clone, Copy)]
pub struct PassThrough {
    pub k: usize,
}

impl Rename for PassThrough {
    fn rename(&self, external: usize) -> Option<usize> {
        (external + 2 <= 2 * self.k).then_some(external)
    }
}

/// Renaming from an explicit table.
#[derive(Debug, Clone, Default)]
pub struct TableRename(pub BTreeMap<usize, usize>);

impl Rename for TableRename {
    fn rename(&self, external: usize) -> Option<usize> {
        self.0.get(&external).copied()
    }
}

/// `(k-1)`-set consensus for at most `k` participants out of many. Pid `p`
/// is `participants[p]`, renamed through `rename`.
pub fn alg3_protocol(family: Arc<FunctionFamily>, rename: &dyn Rename, participants: &[usize]) -> Result<ProtocolSpec, ProtocolError> {
    let k = family.k();
    if participants.is_empty() {
        return Err(ProtocolError::NoParticipants);
    }
    if participants.len() > k {
        return Err(ProtocolError::TooManyParticipants {
            got: participants.len(),
            k,
        });
    }
    let mut internal = Vec::with_capacity(participants.len());
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for &name in participants {
        let j = rename
            .rename(name)
            .filter(|&j| j <= family.max_name())
            .ok_or(ProtocolError::RenameOutOfRange {
                name,
                max: family.max_name(),
            })?;
        if let Some(&first) = owner.get(&j) {
            return Err(if first == name {
                ProtocolError::DuplicateParticipant(name)
            } else {
                ProtocolError::RenameCollision {
                    first,
                    second: name,
                    internal: j,
                }
            });
        }
        owner.insert(j, name);
        internal.push(j);
    }
    let objects = (0..family.len()).map(|_| fresh_wrn(k)).collect();
    let rounds = family.len();
    Ok(ProtocolSpec::new("alg3", participants.len(), objects, rounds + 2, move |pid, input, view| {
        if let Some(last) = view.last() {
            if !last.resp.is_bottom() {
                return Action::Decide(last.resp.clone());
            }
        }
        let l = view.len();
        if l == rounds {
            return Action::Decide(input.clone());
        }
        Action::Invoke(OpRequest::wrn(l, family.apply(l, internal[pid]), input.clone()))
    })
    .with_k(k)
    .with_agreement_bound(k - 1))
}
