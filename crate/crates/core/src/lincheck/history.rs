use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::LinError;
use crate::objects::Op;
use crate::simulator::Pid;
use crate::value::Value;

pub type OpId = usize;

/// One line of a history file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "ev", rename_all = "lowercase")]
pub enum Event {
    Inv {
        op: OpId,
        pid: Pid,
        req: Op,
    },
    Res {
        op: OpId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pid: Option<Pid>,
        val: Value,
    },
}

/// An operation reconstructed from its invocation and (optional) response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpRecord {
    pub op: OpId,
    pub pid: Pid,
    pub req: Op,
    pub inv_at: usize,
    pub res_at: Option<usize>,
    pub resp: Option<Value>,
}

impl OpRecord {
    pub fn is_complete(&self) -> bool {
        self.res_at.is_some()
    }

    /// Real-time precedence: `self` responded before `other` was invoked.
    pub fn precedes(&self, other: &OpRecord) -> bool {
        self.res_at.is_some_and(|r| r < other.inv_at)
    }
}

/// A totally ordered log of invocations and responses on one object.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    pub events: Vec<Event>,
}

impl History {
    pub fn new(events: Vec<Event>) -> Self {
        History { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The first `n` events; operations responding later become pending.
    pub fn prefix(&self, n: usize) -> History {
        History::new(self.events[..n.min(self.events.len())].to_vec())
    }

    /// Checks well-formedness and pairs invocations with responses, in
    /// invocation order.
    pub fn operations(&self) -> Result<Vec<OpRecord>, LinError> {
        let mut ops: Vec<OpRecord> = Vec::new();
        let mut by_id: BTreeMap<OpId, usize> = BTreeMap::new();
        let mut outstanding: BTreeMap<Pid, OpId> = BTreeMap::new();
        for (at, ev) in self.events.iter().enumerate() {
            match ev {
                Event::Inv { op, pid, req } => {
                    if by_id.contains_key(op) {
                        return Err(LinError::Malformed(format!("operation {op} invoked twice")));
                    }
                    if let Some(prev) = outstanding.insert(*pid, *op) {
                        return Err(LinError::Malformed(format!(
                            "P{pid} invoked {op} while {prev} was outstanding"
                        )));
                    }
                    by_id.insert(*op, ops.len());
                    ops.push(OpRecord {
                        op: *op,
                        pid: *pid,
                        req: req.clone(),
                        inv_at: at,
                        res_at: None,
                        resp: None,
                    });
                }
                Event::Res { op, pid, val } => {
                    let Some(&i) = by_id.get(op) else {
                        return Err(LinError::Malformed(format!("response to unknown operation {op}")));
                    };
                    let rec = &mut ops[i];
                    if rec.res_at.is_some() {
                        return Err(LinError::Malformed(format!("operation {op} responded twice")));
                    }
                    if pid.is_some_and(|p| p != rec.pid) {
                        return Err(LinError::Malformed(format!("operation {op} responded on the wrong process")));
                    }
                    rec.res_at = Some(at);
                    rec.resp = Some(val.clone());
                    outstanding.remove(&rec.pid);
                }
            }
        }
        Ok(ops)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for ev in &self.events {
            serde_json::to_writer(&mut out, ev)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<History, LinError> {
        let mut events = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| LinError::Malformed(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(
                serde_json::from_str(&line).map_err(|e| LinError::Malformed(format!("line {}: {e}", n + 1)))?,
            );
        }
        Ok(History::new(events))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv(op: OpId, pid: Pid, index: usize, v: &str) -> Event {
        Event::Inv {
            op,
            pid,
            req: Op::Wrn {
                index,
                value: v.into(),
            },
        }
    }

    fn res(op: OpId, pid: Pid, val: Value) -> Event {
        Event::Res { op, pid: Some(pid), val }
    }

    #[test]
    fn pairs_operations() {
        let h = History::new(vec![inv(0, 0, 0, "a"), inv(1, 1, 1, "b"), res(0, 0, Value::bottom())]);
        let ops = h.operations().unwrap();
        assert_eq!(ops.len(), 2);
        assert!(ops[0].is_complete());
        assert!(!ops[1].is_complete());
        assert!(!ops[0].precedes(&ops[1]));
    }

    #[test]
    fn rejects_malformed() {
        let dup = History::new(vec![inv(0, 0, 0, "a"), inv(0, 1, 0, "b")]);
        assert!(dup.operations().is_err());
        let overlap = History::new(vec![inv(0, 0, 0, "a"), inv(1, 0, 0, "b")]);
        assert!(overlap.operations().is_err());
        let orphan = History::new(vec![res(3, 0, Value::bottom())]);
        assert!(orphan.operations().is_err());
        let wrong_pid = History::new(vec![inv(0, 0, 0, "a"), res(0, 1, Value::bottom())]);
        assert!(wrong_pid.operations().is_err());
    }

    #[test]
    fn jsonl_format() {
        let h = History::new(vec![inv(0, 2, 1, "a"), res(0, 2, Value::bottom())]);
        let mut buf = Vec::new();
        h.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "{\"ev\":\"inv\",\"op\":0,\"pid\":2,\"req\":{\"op\":\"WRN\",\"index\":1,\"value\":\"a\"}}\n\
             {\"ev\":\"res\",\"op\":0,\"pid\":2,\"val\":null}\n"
        );
        assert_eq!(History::read_jsonl(text.as_bytes()).unwrap(), h);
        let no_pid = "{\"ev\":\"inv\",\"op\":0,\"pid\":2,\"req\":{\"op\":\"WRN\",\"index\":1,\"value\":\"a\"}}\n{\"ev\":\"res\",\"op\":0,\"val\":\"x\"}\n";
        let h = History::read_jsonl(no_pid.as_bytes()).unwrap();
        assert_eq!(h.operations().unwrap()[0].resp, Some(Value::token("x")));
    }
}
