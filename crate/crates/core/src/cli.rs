//! `wrnlab` command line: `simulate`, `analyze`, `search`, `lincheck`.
//!
//! Exit codes: 0 when every checked property holds (or the expectation is
//! met), 1 on a violation or an incomplete run, 2 on a usage error. Reports go
//! to stdout, diagnostics to stderr.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analysis::{self, classify_valences, exhaustive_case_checks, replay_witness, solvability_search, Verdict};
use crate::lincheck::{self, certify, check_linearizable_capped, stress_harness, HarnessConfig, History, Implementation};
use crate::objects::{ObjectState, WrnState};
use crate::protocols::{self, alg2_protocol, alg3_protocol, alg4_protocol, build_family, grouped_protocol, FamilyMode};
use crate::simulator::{
    self, check_decisions, explore_all, run, ProtocolSpec, ScheduleStep, SimError, TaskSpec, Trace, Violation,
    ViolationKind,
};
use crate::value::{parse_list, Value};

pub const BUDGET_ENV: &str = "WRNLAB_BUDGET";
const DEFAULT_BUDGET: usize = 5_000_000;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser, Serialize)]
#[command(name = "wrnlab", version, about = "WRN_k objects, set-consensus protocols and their checkers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Run a protocol under exhaustive, random or file-provided schedules.
    Simulate(SimulateArgs),
    /// Valence map, critical configurations and object-level case checks.
    Analyze(AnalyzeArgs),
    /// Bounded search for 2-process consensus over WRN invocation patterns.
    Search(SearchArgs),
    /// Stress a concurrent WRN implementation and check linearizability.
    Lincheck(LincheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    Exhaustive,
    Random,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Solvable,
    Unsolvable,
    Accept,
    Reject,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// alg2, alg3, alg4 or grouped.
    #[arg(long)]
    pub protocol: String,
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of processes for `grouped` (defaults to k).
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma separated proposals; defaults to v0,v1,...
    #[arg(long)]
    pub inputs: Option<String>,
    /// Comma separated participant names for alg3; defaults to 0..k-1.
    #[arg(long)]
    pub participants: Option<String>,
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub schedule: ScheduleMode,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// One schedule per line, as a JSON array of pids or [pid, branch] pairs.
    #[arg(long)]
    pub schedule_file: Option<PathBuf>,
    #[arg(long, default_value = "covering")]
    pub family: String,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Skip per-execution traces and print only the aggregate report.
    #[arg(long)]
    pub no_traces: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[arg(long, default_value = "alg4")]
    pub protocol: String,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value = "0,1")]
    pub inputs: String,
    #[arg(long)]
    pub participants: Option<String>,
    #[arg(long, default_value = "covering")]
    pub family: String,
    /// Arity range for the object-level case checks.
    #[arg(long, default_value_t = 3)]
    pub case_k_min: usize,
    #[arg(long, default_value_t = 8)]
    pub case_k_max: usize,
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub depth: usize,
    #[arg(long, default_value_t = 1)]
    pub objects: usize,
    #[arg(long, value_enum)]
    pub expect: Option<Expectation>,
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct LincheckArgs {
    /// reference-atomic or buggy-split.
    #[arg(long = "impl", default_value = "reference-atomic")]
    pub implementation: String,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 4)]
    pub threads: usize,
    #[arg(long, default_value_t = 6)]
    pub ops: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds to run, starting at --seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, value_enum)]
    pub expect: Option<Expectation>,
    /// Check this JSON-lines history instead of running the harness.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Write each generated history to DIR/seed-<n>.jsonl.
    #[arg(long)]
    pub history_dir: Option<PathBuf>,
    #[arg(long, default_value_t = lincheck::DEFAULT_MAX_OPS)]
    pub max_ops: usize,
}

/// Parses `args` and runs the command, returning the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let config = serde_json::to_value(&cli.command).unwrap_or_default();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a, &config, out, err),
        Command::Analyze(a) => analyze(a, &config, out),
        Command::Search(a) => search(a, &config, out),
        Command::Lincheck(a) => lincheck(a, &config, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_VIOLATION
        }
    }
}

enum Failure {
    Usage(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn usage(msg: impl ToString) -> Failure {
    Failure::Usage(msg.to_string())
}

fn budget(flag: Option<usize>) -> Result<usize, Failure> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| usage(format!("{BUDGET_ENV} must be a positive integer, got {s:?}"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> Result<(), Failure> {
    serde_json::to_writer(&mut *out, value).map_err(|e| Failure::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

fn parse_names(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| usage(format!("bad participant name {t:?}"))))
        .collect()
}

fn default_inputs(n: usize) -> Vec<Value> {
    (0..n).map(|i| Value::token(format!("v{i}"))).collect()
}

struct ProtocolChoice<'a> {
    name: &'a str,
    k: Option<usize>,
    n: Option<usize>,
    participants: Option<&'a str>,
    family: &'a str,
}

fn build_protocol(c: &ProtocolChoice<'_>) -> Result<ProtocolSpec, Failure> {
    let need_k = |default: Option<usize>| c.k.or(default).ok_or_else(|| usage(format!("{} needs --k", c.name)));
    match c.name {
        "alg2" => alg2_protocol(need_k(None)?).map_err(usage),
        "alg4" => match c.k {
            None | Some(2) => Ok(alg4_protocol()),
            Some(k) => Err(usage(format!("alg4 runs on WRN_2 (got --k {k})"))),
        },
        "alg3" => {
            let k = need_k(None)?;
            let mode: FamilyMode = c.family.parse().map_err(usage)?;
            let family = build_family(k, mode).map_err(usage)?;
            let names = match c.participants {
                Some(s) => parse_names(s)?,
                None => (0..k).collect(),
            };
            alg3_protocol(Arc::new(family), &protocols::PassThrough { k }, &names).map_err(usage)
        }
        "grouped" => {
            let k = need_k(None)?;
            grouped_protocol(k, c.n.unwrap_or(k)).map_err(usage)
        }
        other => Err(usage(format!("unknown protocol {other:?} (expected alg2, alg3, alg4 or grouped)"))),
    }
}

fn resolve_inputs(spec: &ProtocolSpec, inputs: Option<&str>) -> Result<Vec<Value>, Failure> {
    let values = match inputs {
        Some(s) => parse_list(s),
        None => default_inputs(spec.processes()),
    };
    if values.len() != spec.processes() {
        return Err(usage(format!(
            "{} has {} processes but {} inputs were given",
            spec.name(),
            spec.processes(),
            values.len()
        )));
    }
    Ok(values)
}

#[derive(Debug, Default, Serialize)]
struct SimulateReport {
    config: serde_json::Value,
    protocol: String,
    processes: usize,
    inputs: Vec<Value>,
    task: Option<TaskSpec>,
    executions: u64,
    complete: bool,
    nodes: Option<usize>,
    paths: Option<String>,
    max_distinct_decisions: usize,
    max_own_steps: usize,
    step_bound: usize,
    validity: bool,
    agreement: bool,
    wait_free: bool,
    violation_count: u64,
    violations: Vec<Violation>,
    ok: bool,
}

impl SimulateReport {
    fn absorb(&mut self, violations: &[Violation]) {
        for v in violations {
            match v.kind {
                ViolationKind::Validity => self.validity = false,
                ViolationKind::Agreement => self.agreement = false,
                ViolationKind::WaitFreedom => self.wait_free = false,
            }
            self.violation_count += 1;
            if self.violations.len() < 32 {
                self.violations.push(v.clone());
            }
        }
    }
}

struct Row<'a> {
    id: u64,
    schedule: &'a [ScheduleStep],
    decisions_distinct: usize,
    violations: &'a [Violation],
}

fn emit_row(
    out: &mut dyn Write,
    format: Format,
    traces: bool,
    spec: &ProtocolSpec,
    inputs: &[Value],
    row: Row<'_>,
) -> Result<(), Failure> {
    match format {
        Format::Csv => {
            let valid = !row.violations.iter().any(|v| v.kind == ViolationKind::Validity);
            let agreed = !row.violations.iter().any(|v| v.kind == ViolationKind::Agreement);
            writeln!(out, "{},{},{},{}", row.id, row.decisions_distinct, valid, agreed)?;
        }
        Format::Json if traces => {
            // Schedules cut short by a wait-freedom violation do not replay.
            match run(spec, inputs, row.schedule) {
                Ok(exec) => write_json(out, &Trace::from_execution(&exec, row.violations.to_vec()))?,
                Err(_) => write_json(out, &json!({
                    "protocol": spec.name(),
                    "schedule": row.schedule,
                    "violations": row.violations,
                }))?,
            }
        }
        Format::Json => {}
    }
    Ok(())
}

fn read_schedules(path: &PathBuf) -> Result<Vec<Vec<ScheduleStep>>, Failure> {
    let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: Vec<serde_json::Value> =
            serde_json::from_str(&line).map_err(|e| usage(format!("schedule line {}: {e}", n + 1)))?;
        let steps = raw
            .iter()
            .map(|v| match v {
                serde_json::Value::Number(p) => p.as_u64().map(|p| ScheduleStep::new(p as usize)),
                serde_json::Value::Array(pair) if pair.len() == 2 => Some(ScheduleStep {
                    pid: pair[0].as_u64()? as usize,
                    branch: pair[1].as_u64()? as usize,
                }),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| usage(format!("schedule line {}: expected pids or [pid, branch] pairs", n + 1)))?;
        out.push(steps);
    }
    Ok(out)
}

fn simulate(a: &SimulateArgs, config: &serde_json::Value, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match a.schedule {
        ScheduleMode::Random if a.seed.is_none() => return Err(usage("--schedule random requires --seed")),
        ScheduleMode::Exhaustive | ScheduleMode::File if a.seed.is_some() => {
            return Err(usage("--seed only applies to --schedule random"))
        }
        ScheduleMode::File if a.schedule_file.is_none() => return Err(usage("--schedule file requires --schedule-file")),
        ScheduleMode::Exhaustive | ScheduleMode::Random if a.schedule_file.is_some() => {
            return Err(usage("--schedule-file only applies to --schedule file"))
        }
        _ => {}
    }
    let spec = build_protocol(&ProtocolChoice {
        name: &a.protocol,
        k: a.k,
        n: a.n,
        participants: a.participants.as_deref(),
        family: &a.family,
    })?;
    let inputs = resolve_inputs(&spec, a.inputs.as_deref())?;
    let task = TaskSpec::for_protocol(&spec, &inputs);
    let traces = !a.no_traces;
    let mut report = SimulateReport {
        config: config.clone(),
        protocol: spec.name().to_string(),
        processes: spec.processes(),
        inputs: inputs.clone(),
        task: Some(task),
        complete: true,
        step_bound: spec.step_bound(),
        validity: true,
        agreement: true,
        wait_free: true,
        ..Default::default()
    };
    if a.format == Format::Csv {
        writeln!(out, "schedule_id,distinct_decisions,valid,agreed")?;
    }
    match a.schedule {
        ScheduleMode::Exhaustive => {
            let ex = explore_all(&spec, &inputs, &task, budget(a.budget)?).map_err(usage)?;
            for (id, e) in ex.executions.iter().enumerate() {
                emit_row(out, a.format, traces, &spec, &inputs, Row {
                    id: id as u64,
                    schedule: &e.schedule,
                    decisions_distinct: e.distinct_decisions,
                    violations: &e.violations,
                })?;
            }
            report.absorb(&ex.violations);
            report.executions = ex.executions.len() as u64;
            report.complete = ex.complete;
            report.nodes = Some(ex.nodes);
            report.paths = Some(ex.paths.to_string());
            report.max_distinct_decisions = ex.max_distinct_decisions;
            report.max_own_steps = ex.max_own_steps;
        }
        ScheduleMode::Random => {
            let seed = a.seed.expect("checked above");
            let mut io_result = Ok(());
            let rr = simulator::run_random_with(&spec, &inputs, &task, seed, a.trials, |t| {
                if io_result.is_ok() {
                    io_result = emit_row(out, a.format, traces, &spec, &inputs, Row {
                        id: t.index,
                        schedule: &t.schedule,
                        decisions_distinct: t.decisions.values().collect::<std::collections::BTreeSet<_>>().len(),
                        violations: &t.violations,
                    });
                }
            })
            .map_err(usage)?;
            io_result?;
            report.executions = rr.trials;
            report.max_distinct_decisions = rr.max_distinct_decisions;
            report.max_own_steps = rr.max_own_steps;
            report.absorb(&rr.violations);
            report.violation_count = rr.violation_count;
        }
        ScheduleMode::File => {
            let path = a.schedule_file.as_ref().expect("checked above");
            for (id, schedule) in read_schedules(path)?.into_iter().enumerate() {
                let (decisions, own, mut violations) = match run(&spec, &inputs, &schedule) {
                    Ok(exec) => {
                        let own = exec.last().processes().iter().map(|p| p.own_steps()).max().unwrap_or(0);
                        (exec.decisions(), own, Vec::new())
                    }
                    Err(e @ SimError::WaitFreedom { .. }) => (
                        Default::default(),
                        spec.step_bound(),
                        vec![Violation {
                            kind: ViolationKind::WaitFreedom,
                            detail: e.to_string(),
                            schedule: schedule.clone(),
                        }],
                    ),
                    Err(e) => return Err(usage(format!("schedule {id}: {e}"))),
                };
                violations.extend(check_decisions(&inputs, &decisions, &task).into_iter().map(|(kind, detail)| {
                    Violation {
                        kind,
                        detail,
                        schedule: schedule.clone(),
                    }
                }));
                let distinct = decisions.values().collect::<std::collections::BTreeSet<_>>().len();
                emit_row(out, a.format, traces, &spec, &inputs, Row {
                    id: id as u64,
                    schedule: &schedule,
                    decisions_distinct: distinct,
                    violations: &violations,
                })?;
                report.absorb(&violations);
                report.executions += 1;
                report.max_distinct_decisions = report.max_distinct_decisions.max(distinct);
                report.max_own_steps = report.max_own_steps.max(own);
            }
        }
    }
    report.ok = report.complete && report.violation_count == 0;
    match a.format {
        Format::Json => write_json(out, &json!({ "report": report }))?,
        Format::Csv => {
            serde_json::to_writer(&mut *err, &json!({ "report": report })).map_err(|e| Failure::Io(e.into()))?;
            writeln!(err)?;
        }
    }
    Ok(if report.ok { EXIT_OK } else { EXIT_VIOLATION })
}

fn analyze(a: &AnalyzeArgs, config: &serde_json::Value, out: &mut dyn Write) -> Result<i32, Failure> {
    let spec = build_protocol(&ProtocolChoice {
        name: &a.protocol,
        k: a.k,
        n: Some(2),
        participants: a.participants.as_deref(),
        family: &a.family,
    })?;
    if spec.processes() != 2 {
        return Err(usage(format!(
            "analyze needs a 2-process protocol; {} has {} processes",
            spec.name(),
            spec.processes()
        )));
    }
    if a.case_k_min < 2 || a.case_k_min > a.case_k_max {
        return Err(usage("case-check arities need 2 <= --case-k-min <= --case-k-max"));
    }
    let inputs = resolve_inputs(&spec, Some(&a.inputs))?;
    let budget = budget(a.budget)?;
    let (valences, critical, initial, complete) = match classify_valences(&spec, &inputs, budget) {
        Ok(map) => {
            let entries = map.entries();
            let critical: Vec<Vec<usize>> = entries.iter().filter(|e| e.critical).map(|e| e.schedule.clone()).collect();
            let initial = map.initial().to_string();
            (entries, critical, Some(initial), true)
        }
        Err(analysis::AnalysisError::BudgetExceeded { .. }) => (Vec::new(), Vec::new(), None, false),
        Err(e) => return Err(usage(e)),
    };
    let mut cases = Vec::new();
    for k in a.case_k_min..=a.case_k_max {
        cases.push(exhaustive_case_checks(k).map_err(usage)?);
    }
    let counterexamples: usize = cases.iter().map(|c| c.counterexamples.len()).sum();
    let ok = complete && counterexamples == 0;
    write_json(out, &json!({
        "config": config,
        "protocol": spec.name(),
        "inputs": inputs,
        "complete": complete,
        "initial_valence": initial,
        "initial_critical": critical.iter().any(|s| s.is_empty()),
        "critical": critical,
        "valences": valences,
        "case_checks": cases.iter().map(|c| json!({
            "k": c.k,
            "absorption_checked": c.absorption_checked,
            "commutation_checked": c.commutation_checked,
            "counterexamples": c.counterexamples.len(),
            "one_side_independent": c.one_side_independent,
            "both_dependent": c.both_dependent,
        })).collect::<Vec<_>>(),
        "counterexamples": counterexamples,
        "ok": ok,
    }))?;
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}

fn search(a: &SearchArgs, config: &serde_json::Value, out: &mut dyn Write) -> Result<i32, Failure> {
    if a.k < 2 || a.depth == 0 || a.objects == 0 {
        return Err(usage("search needs --k >= 2, --depth >= 1 and --objects >= 1"));
    }
    if matches!(a.expect, Some(Expectation::Accept | Expectation::Reject)) {
        return Err(usage("search expects solvable or unsolvable"));
    }
    let budget = budget(a.budget)?;
    let report = solvability_search(a.k, a.depth, a.objects, budget).map_err(usage)?;
    let mut witnesses_ok = true;
    for v in &report.verdicts {
        let replays = match v.verdict {
            Verdict::Solvable => Some(replay_witness(a.k, a.objects, v, budget).map_err(usage)?),
            Verdict::Unsolvable => None,
        };
        witnesses_ok &= replays != Some(false);
        let mut line = serde_json::to_value(v).map_err(|e| Failure::Io(e.into()))?;
        if let Some(r) = replays {
            line["witness_replays"] = json!(r);
        }
        write_json(out, &line)?;
    }
    let ok = report.complete
        && witnesses_ok
        && match a.expect {
            Some(Expectation::Solvable) => report.solvable > 0,
            Some(Expectation::Unsolvable) => report.all_unsolvable(),
            _ => true,
        };
    write_json(out, &json!({ "summary": {
        "config": config,
        "k": report.k,
        "depth": report.depth,
        "objects": report.objects,
        "patterns": report.patterns_checked,
        "solvable": report.solvable,
        "executions": report.executions,
        "complete": report.complete,
        "partial": !report.complete,
        "witnesses_replay": witnesses_ok,
        "ok": ok,
    }}))?;
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}

fn lincheck(a: &LincheckArgs, config: &serde_json::Value, out: &mut dyn Write) -> Result<i32, Failure> {
    let implementation: Implementation = a.implementation.parse().map_err(usage)?;
    let expect = match a.expect {
        None | Some(Expectation::Accept) => Expectation::Accept,
        Some(Expectation::Reject) => Expectation::Reject,
        Some(_) => return Err(usage("lincheck expects accept or reject")),
    };
    if a.k == 0 || a.threads == 0 || a.seeds == 0 {
        return Err(usage("--k, --threads and --seeds must be positive"));
    }
    let init = ObjectState::Wrn(WrnState::new(a.k).map_err(usage)?);
    let mut histories: Vec<(Option<u64>, History)> = Vec::new();
    if let Some(path) = &a.history {
        let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        histories.push((None, History::read_jsonl(BufReader::new(file)).map_err(usage)?));
    } else {
        if a.threads * a.ops > a.max_ops {
            return Err(usage(format!(
                "{} threads x {} ops exceeds --max-ops {}",
                a.threads, a.ops, a.max_ops
            )));
        }
        if let Some(dir) = &a.history_dir {
            std::fs::create_dir_all(dir)?;
        }
        for seed in a.seed..a.seed + a.seeds {
            let h = stress_harness(&HarnessConfig {
                implementation,
                k: a.k,
                threads: a.threads,
                ops_per_thread: a.ops,
                seed,
            });
            if let Some(dir) = &a.history_dir {
                h.write_jsonl(File::create(dir.join(format!("seed-{seed}.jsonl")))?)?;
            }
            histories.push((Some(seed), h));
        }
    }
    let (mut accepted, mut rejected, mut uncertified) = (0u64, 0u64, 0u64);
    for (seed, h) in &histories {
        let verdict = check_linearizable_capped(h, &init, a.max_ops).map_err(usage)?;
        let certified = verdict.witness.as_ref().map(|w| certify(h, &init, w));
        if verdict.accepted {
            accepted += 1;
            if certified != Some(true) {
                uncertified += 1;
            }
        } else {
            rejected += 1;
        }
        write_json(out, &json!({
            "seed": seed,
            "ops": h.operations().map(|o| o.len()).unwrap_or(0),
            "accepted": verdict.accepted,
            "witness": verdict.witness,
            "certified": certified,
            "violating_prefix": verdict.violating_prefix,
        }))?;
    }
    let ok = uncertified == 0
        && match expect {
            Expectation::Reject => rejected > 0,
            _ => rejected == 0,
        };
    write_json(out, &json!({ "summary": {
        "config": config,
        "histories": histories.len(),
        "accepted": accepted,
        "rejected": rejected,
        "uncertified": uncertified,
        "ok": ok,
    }}))?;
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}
