use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    check_decisions, Configuration, Pid, ProtocolSpec, ScheduleStep, SimError, TaskSpec, Violation, ViolationKind,
};
use crate::value::Value;

/// Violations kept verbatim in a report; the rest are only counted.
const KEPT_VIOLATIONS: usize = 32;

/// One randomly scheduled execution.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub index: u64,
    pub schedule: Vec<ScheduleStep>,
    pub decisions: BTreeMap<Pid, Value>,
    pub own_steps: Vec<usize>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RandomReport {
    pub protocol: String,
    pub seed: u64,
    pub trials: u64,
    pub task: TaskSpec,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
    /// Number of trials per distinct-decision count.
    pub distinct_histogram: BTreeMap<usize, u64>,
    pub max_distinct_decisions: usize,
    pub max_own_steps: usize,
}

impl RandomReport {
    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }
}

pub fn run_random(protocol: &ProtocolSpec, inputs: &[Value], task: &TaskSpec, seed: u64, trials: u64) -> Result<RandomReport, SimError> {
    run_random_with(protocol, inputs, task, seed, trials, |_| {})
}

/// Runs `trials` executions, each picking uniformly among enabled processes
/// (and among nondeterministic outcomes) at every move. Reproducible from
/// `seed`. `visit` sees every trial as it finishes.
pub fn run_random_with<F>(
    protocol: &ProtocolSpec,
    inputs: &[Value],
    task: &TaskSpec,
    seed: u64,
    trials: u64,
    mut visit: F,
) -> Result<RandomReport, SimError>
where
    F: FnMut(&TrialOutcome),
{
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    let initial = Configuration::initial(protocol, inputs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = RandomReport {
        protocol: protocol.name().to_string(),
        seed,
        trials,
        task: *task,
        violation_count: 0,
        violations: Vec::new(),
        distinct_histogram: BTreeMap::new(),
        max_distinct_decisions: 0,
        max_own_steps: 0,
    };
    let mut enabled = Vec::with_capacity(protocol.processes());
    for index in 0..trials {
        let mut config = initial.clone();
        let mut schedule = Vec::new();
        let mut violations = Vec::new();
        loop {
            enabled.clear();
            enabled.extend(config.enabled());
            if enabled.is_empty() {
                break;
            }
            let pid = enabled[rng.gen_range(0..enabled.len())];
            let branches = match config.branch_count(protocol, pid) {
                Ok(n) => n,
                Err(e @ SimError::WaitFreedom { .. }) => {
                    violations.push(Violation {
                        kind: ViolationKind::WaitFreedom,
                        detail: e.to_string(),
                        schedule: schedule.clone(),
                    });
                    config.crash(pid)?;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let branch = if branches > 1 { rng.gen_range(0..branches) } else { 0 };
            config.step_mut(protocol, pid, branch)?;
            schedule.push(ScheduleStep { pid, branch });
        }
        let decisions = config.decisions();
        for (kind, detail) in check_decisions(inputs, &decisions, task) {
            violations.push(Violation {
                kind,
                detail,
                schedule: schedule.clone(),
            });
        }
        let distinct = decisions.values().collect::<BTreeSet<_>>().len();
        let own_steps: Vec<usize> = config.processes().iter().map(|p| p.own_steps()).collect();
        *report.distinct_histogram.entry(distinct).or_default() += 1;
        report.max_distinct_decisions = report.max_distinct_decisions.max(distinct);
        report.max_own_steps = report.max_own_steps.max(own_steps.iter().copied().max().unwrap_or(0));
        report.violation_count += violations.len() as u64;
        for v in &violations {
            if report.violations.len() < KEPT_VIOLATIONS {
                report.violations.push(v.clone());
            }
        }
        visit(&TrialOutcome {
            index,
            schedule,
            decisions,
            own_steps,
            violations,
        });
    }
    Ok(report)
}
