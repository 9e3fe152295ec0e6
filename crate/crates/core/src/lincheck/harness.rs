use std::fmt;
use std::str::FromStr;
use std::sync::{Barrier, Mutex};
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::history::{Event, History};
use super::LinError;
use crate::objects::{Op, WrnState};
use crate::value::Value;

/// A `WRN_k` shared between threads.
pub trait ConcurrentWrn: Sync {
    fn wrn(&self, index: usize, value: &Value) -> Value;
}

/// Write and read under one lock: a single linearization point.
#[derive(Debug)]
pub struct ReferenceAtomic {
    state: Mutex<WrnState>,
}

impl ReferenceAtomic {
    pub fn new(k: usize) -> Self {
        ReferenceAtomic {
            state: Mutex::new(WrnState::new(k).expect("k >= 1")),
        }
    }
}

impl ConcurrentWrn for ReferenceAtomic {
    fn wrn(&self, index: usize, value: &Value) -> Value {
        self.state.lock().unwrap().apply_mut(index, value).expect("valid request")
    }
}

/// Negative control: the write and the read are separate critical sections
/// with a yield in between, so other operations can slip into the gap.
#[derive(Debug)]
pub struct BuggySplit {
    cells: Vec<Mutex<Value>>,
}

impl BuggySplit {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1);
        BuggySplit {
            cells: (0..k).map(|_| Mutex::new(Value::bottom())).collect(),
        }
    }
}

impl ConcurrentWrn for BuggySplit {
    fn wrn(&self, index: usize, value: &Value) -> Value {
        *self.cells[index].lock().unwrap() = value.clone();
        thread::yield_now();
        self.cells[(index + 1) % self.cells.len()].lock().unwrap().clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Implementation {
    ReferenceAtomic,
    BuggySplit,
}

impl FromStr for Implementation {
    type Err = LinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reference-atomic" => Ok(Implementation::ReferenceAtomic),
            "buggy-split" => Ok(Implementation::BuggySplit),
            other => Err(LinError::UnknownImplementation(other.to_string())),
        }
    }
}

impl fmt::Display for Implementation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Implementation::ReferenceAtomic => "reference-atomic",
            Implementation::BuggySplit => "buggy-split",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub implementation: Implementation,
    pub k: usize,
    pub threads: usize,
    pub ops_per_thread: usize,
    pub seed: u64,
}

#[derive(Default)]
struct Log {
    events: Vec<Event>,
    next_op: usize,
}

/// Runs `threads` OS threads issuing random `WRN` requests against one shared
/// object and records every invocation and response on a single log. The
/// seed fixes the requests; the interleaving is up to the OS.
pub fn stress_harness(cfg: &HarnessConfig) -> History {
    match cfg.implementation {
        Implementation::ReferenceAtomic => drive(&ReferenceAtomic::new(cfg.k), cfg),
        Implementation::BuggySplit => drive(&BuggySplit::new(cfg.k), cfg),
    }
}

fn drive(object: &dyn ConcurrentWrn, cfg: &HarnessConfig) -> History {
    let log = Mutex::new(Log::default());
    let barrier = Barrier::new(cfg.threads);
    thread::scope(|s| {
        for t in 0..cfg.threads {
            let (log, barrier) = (&log, &barrier);
            s.spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(t as u64);
                let requests: Vec<(usize, Value)> = (0..cfg.ops_per_thread)
                    .map(|n| (rng.gen_range(0..cfg.k), Value::token(format!("t{t}.{n}"))))
                    .collect();
                barrier.wait();
                for (index, value) in requests {
                    let op = {
                        let mut l = log.lock().unwrap();
                        let op = l.next_op;
                        l.next_op += 1;
                        l.events.push(Event::Inv {
                            op,
                            pid: t,
                            req: Op::Wrn {
                                index,
                                value: value.clone(),
                            },
                        });
                        op
                    };
                    let val = object.wrn(index, &value);
                    log.lock().unwrap().events.push(Event::Res { op, pid: Some(t), val });
                }
            });
        }
    });
    History::new(log.into_inner().unwrap().events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn implementation_names() {
        assert_eq!("buggy-split".parse::<Implementation>().unwrap(), Implementation::BuggySplit);
        assert!("nosuch".parse::<Implementation>().is_err());
        assert_eq!(Implementation::ReferenceAtomic.to_string(), "reference-atomic");
    }

    #[test]
    fn sequential_split_is_correct_for_k_at_least_2() {
        let b = BuggySplit::new(3);
        assert!(b.wrn(0, &"a".into()).is_bottom());
        assert_eq!(b.wrn(2, &"c".into()), Value::token("a"));
    }

    #[test]
    fn logs_are_well_formed() {
        for threads in 1..=4 {
            for implementation in [Implementation::ReferenceAtomic, Implementation::BuggySplit] {
                let h = stress_harness(&HarnessConfig {
                    implementation,
                    k: 3,
                    threads,
                    ops_per_thread: 5,
                    seed: 1,
                });
                let ops = h.operations().unwrap();
                assert_eq!(ops.len(), threads * 5);
                assert!(ops.iter().all(|o| o.is_complete()));
            }
        }
    }
}
