//! Online dispatch over a dispatchable form.
//!
//! The executor keeps, for every node, the window implied by the nodes
//! executed so far (one row/column of the closed distance matrix per
//! execution) plus the waits of links that have started but not finished.
//! A contingent finish becomes visible only when the simulated clock
//! reaches it. Events at the same instant run finishes first, then
//! starts, each group in node-id order.

use crate::dc::{DispatchableForm, INF};
use crate::instance::{Instance, Tu, UncertaintyModel};
use crate::solver::Solution;
use crate::stnu::{NodeId, NodeKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionPolicy {
    /// Execute every enabled node at the start of its window.
    #[default]
    EarliestFeasible,
    /// Execute at the end of the window when it is bounded, otherwise as
    /// early as possible.
    LatestSafe,
}

impl std::str::FromStr for ExecutionPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "earliest_feasible" | "earliest" => Ok(Self::EarliestFeasible),
            "latest_safe" | "latest" => Ok(Self::LatestSafe),
            other => Err(format!("unknown policy {other:?} (earliest_feasible | latest_safe)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecutionError {
    #[error("duration {value} of link/task {index} outside [{lower}, {upper}]")]
    DurationOutOfBounds { index: usize, value: Tu, lower: Tu, upper: Tu },
    #[error("expected {expected} durations, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("dead end at time {time}: node {node} cannot be executed")]
    DeadEnd { node: NodeId, time: Tu },
}

/// A requirement edge broken by the final times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub from: NodeId,
    pub to: NodeId,
    pub weight: Tu,
    /// `t(to) - t(from)`
    pub actual: Tu,
}

/// One dispatch decision and how much had been observed when it was made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub time: Tu,
    pub node: NodeId,
    /// Length of the `observations` prefix known at this decision.
    pub known: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExecutionTrace {
    /// Per contingent link; for scheduling networks link `k` is task `k`.
    pub sampled_durations: Vec<Tu>,
    /// Start time per task.
    pub task_start: Vec<Tu>,
    /// Execution time per node (empty for static replay).
    pub node_time: Vec<Tu>,
    pub dispatch_order: Vec<NodeId>,
    pub job_completion: Vec<Tu>,
    pub realized_makespan: Tu,
    pub violations: Vec<Violation>,
    pub per_job_earliness: Vec<Tu>,
    pub per_job_tardiness: Vec<Tu>,
    /// Observed finishes `(link, time)` in the order they were seen.
    pub observations: Vec<(usize, Tu)>,
    pub audit: Vec<AuditEntry>,
}

impl ExecutionTrace {
    /// Recomputes per-job earliness and tardiness against `deadlines`.
    pub fn apply_deadlines(&mut self, deadlines: &[Tu]) {
        self.per_job_earliness =
            self.job_completion.iter().zip(deadlines).map(|(&c, &d)| (d - c).max(0)).collect();
        self.per_job_tardiness =
            self.job_completion.iter().zip(deadlines).map(|(&c, &d)| (c - d).max(0)).collect();
    }

    pub fn any_tardy(&self) -> bool {
        self.per_job_tardiness.iter().any(|&t| t > 0)
    }

    /// CSV row: makespan, per-job completion, per-job tardy flags.
    pub fn csv_row(&self, sample: usize) -> String {
        let mut row = format!("{sample},{}", self.realized_makespan);
        for c in &self.job_completion {
            row.push_str(&format!(",{c}"));
        }
        for t in &self.per_job_tardiness {
            row.push_str(if *t > 0 { ",1" } else { ",0" });
        }
        row
    }
}

fn check_bounds(durations: &[Tu], bounds: impl Iterator<Item = (Tu, Tu)>) -> Result<(), ExecutionError> {
    for (index, ((lower, upper), &value)) in bounds.zip(durations).enumerate() {
        if value < lower || value > upper {
            return Err(ExecutionError::DurationOutOfBounds { index, value, lower, upper });
        }
    }
    Ok(())
}

struct Dispatcher<'a> {
    df: &'a DispatchableForm,
    n: usize,
    time: Vec<Option<Tu>>,
    lo: Vec<Tu>,
    hi: Vec<Tu>,
    /// unexecuted nodes that must strictly precede each node
    blockers: Vec<usize>,
    /// waits per node: (activation, contingent, weight)
    waits: Vec<Vec<(NodeId, NodeId, Tu)>>,
}

impl<'a> Dispatcher<'a> {
    fn new(df: &'a DispatchableForm) -> Self {
        let n = df.n();
        let mut blockers = vec![0; n];
        for (x, b) in blockers.iter_mut().enumerate() {
            *b = (0..n).filter(|&y| y != x && df.d(x, y) < 0).count();
        }
        let mut waits = vec![Vec::new(); n];
        for w in &df.waits {
            let c = df.stnu.contingents[w.link];
            waits[w.node].push((c.activation, c.contingent, w.weight));
        }
        Dispatcher { df, n, time: vec![None; n], lo: vec![-INF; n], hi: vec![INF; n], blockers, waits }
    }

    fn execute(&mut self, y: NodeId, t: Tu) {
        self.time[y] = Some(t);
        for x in 0..self.n {
            if self.time[x].is_some() {
                continue;
            }
            let back = self.df.d(x, y);
            if back < INF {
                self.lo[x] = self.lo[x].max(t - back);
            }
            let fwd = self.df.d(y, x);
            if fwd < INF {
                self.hi[x] = self.hi[x].min(t + fwd);
            }
            if back < 0 {
                self.blockers[x] -= 1;
            }
        }
    }

    /// Window lower bound including waits whose link is still running.
    fn lower(&self, x: NodeId) -> Tu {
        let mut lo = self.lo[x];
        for &(a, c, w) in &self.waits[x] {
            if let (Some(ta), None) = (self.time[a], self.time[c]) {
                lo = lo.max(ta - w);
            }
        }
        lo
    }
}

/// Runs the schedule online against `durations` (one per contingent link).
pub fn execute(
    df: &DispatchableForm,
    durations: &[Tu],
    policy: ExecutionPolicy,
) -> Result<ExecutionTrace, ExecutionError> {
    let g = &df.stnu;
    if durations.len() != g.contingents.len() {
        return Err(ExecutionError::WrongLength { expected: g.contingents.len(), got: durations.len() });
    }
    check_bounds(durations, g.contingents.iter().map(|c| (c.lower, c.upper)))?;
    let n = df.n();
    let link_of = g.contingent_of();
    let mut links_from: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, c) in g.contingents.iter().enumerate() {
        links_from[c.activation].push(k);
    }

    let mut d = Dispatcher::new(df);
    let mut trace = ExecutionTrace { sampled_durations: durations.to_vec(), ..Default::default() };
    // (finish time, contingent node) for running links; the dispatcher
    // never reads these before the clock gets there
    let mut running: Vec<(Tu, NodeId)> = Vec::new();
    let mut now: Tu = 0;
    let mut remaining = n;

    let fire = |d: &mut Dispatcher, x: NodeId, t: Tu, running: &mut Vec<(Tu, NodeId)>, trace: &mut ExecutionTrace| {
        d.execute(x, t);
        trace.dispatch_order.push(x);
        for &k in &links_from[x] {
            running.push((t + durations[k], g.contingents[k].contingent));
        }
    };

    let r = df.reference;
    if link_of[r].is_some() {
        return Err(ExecutionError::DeadEnd { node: r, time: 0 });
    }
    trace.audit.push(AuditEntry { time: 0, node: r, known: 0 });
    fire(&mut d, r, 0, &mut running, &mut trace);
    remaining -= 1;

    while remaining > 0 {
        // next planned start from what is known now
        let mut plan: Option<(Tu, NodeId)> = None;
        for x in 0..n {
            if d.time[x].is_some() || link_of[x].is_some() {
                continue;
            }
            let hi = d.hi[x];
            if hi < now {
                return Err(ExecutionError::DeadEnd { node: x, time: now });
            }
            if d.blockers[x] > 0 {
                continue;
            }
            let lo = d.lower(x).max(now);
            if lo > hi {
                return Err(ExecutionError::DeadEnd { node: x, time: now });
            }
            let at = match policy {
                ExecutionPolicy::EarliestFeasible => lo,
                ExecutionPolicy::LatestSafe if hi < INF => hi,
                ExecutionPolicy::LatestSafe => lo,
            };
            if plan.map_or(true, |p| (at, x) < p) {
                plan = Some((at, x));
            }
        }
        let next_finish = running.iter().copied().min();
        match (plan, next_finish) {
            (_, Some((f, _))) if plan.map_or(true, |(at, _)| f <= at) => {
                now = f;
                running.sort_unstable();
                let due: Vec<NodeId> = running.iter().take_while(|e| e.0 == f).map(|e| e.1).collect();
                running.retain(|e| e.0 != f);
                for c in due {
                    let k = link_of[c].expect("running entries are contingent");
                    trace.observations.push((k, f));
                    fire(&mut d, c, f, &mut running, &mut trace);
                    remaining -= 1;
                }
            }
            (Some((at, x)), _) => {
                now = at;
                trace.audit.push(AuditEntry { time: at, node: x, known: trace.observations.len() });
                fire(&mut d, x, at, &mut running, &mut trace);
                remaining -= 1;
            }
            (None, _) => {
                let stuck = (0..n).find(|&x| d.time[x].is_none()).unwrap_or(0);
                return Err(ExecutionError::DeadEnd { node: stuck, time: now });
            }
        }
    }

    let times: Vec<Tu> = d.time.iter().map(|t| t.expect("all executed")).collect();
    for (index, e) in g.requirements.iter().enumerate() {
        let actual = times[e.to] - times[e.from];
        if actual > e.weight {
            trace.violations.push(Violation { index, from: e.from, to: e.to, weight: e.weight, actual });
        }
    }
    fill_from_nodes(&mut trace, df, &times);
    trace.node_time = times;
    Ok(trace)
}

fn fill_from_nodes(trace: &mut ExecutionTrace, df: &DispatchableForm, times: &[Tu]) {
    let g = &df.stnu;
    let mut starts = Vec::new();
    let mut jobs = Vec::new();
    let mut makespan = None;
    for node in &g.nodes {
        match (node.kind, node.reference) {
            (NodeKind::TaskStart, Some(t)) => starts.push((t, times[node.id])),
            (NodeKind::JobFinish, Some(j)) => jobs.push((j, times[node.id])),
            (NodeKind::TaskFinish, _) => makespan = Some(makespan.unwrap_or(0).max(times[node.id])),
            _ => {}
        }
    }
    starts.sort_unstable();
    jobs.sort_unstable();
    trace.task_start = starts.into_iter().map(|s| s.1).collect();
    trace.job_completion = jobs.into_iter().map(|j| j.1).collect();
    trace.realized_makespan = makespan.unwrap_or_else(|| times.iter().copied().max().unwrap_or(0));
    // deadline arcs present in the network (hard mode)
    let origin = g.origin();
    let mut deadlines = vec![None; trace.job_completion.len()];
    for e in &g.requirements {
        if Some(e.from) != origin {
            continue;
        }
        if let (NodeKind::JobFinish, Some(j)) = (g.nodes[e.to].kind, g.nodes[e.to].reference) {
            if let Some(slot) = deadlines.get_mut(j) {
                *slot = Some(e.weight.min(slot.unwrap_or(INF)));
            }
        }
    }
    if deadlines.iter().all(|d| d.is_some()) {
        let d: Vec<Tu> = deadlines.into_iter().flatten().collect();
        trace.apply_deadlines(&d);
    } else {
        trace.per_job_earliness = vec![0; trace.job_completion.len()];
        trace.per_job_tardiness = vec![0; trace.job_completion.len()];
    }
}

/// Baseline replay of a fixed plan: same modes and orders, each task
/// starts at its planned time or when its job and machine predecessors
/// finish, whichever is later. `durations` are per task.
pub fn replay_static(
    instance: &Instance,
    solution: &Solution,
    u: &UncertaintyModel,
    durations: &[Tu],
) -> Result<ExecutionTrace, ExecutionError> {
    let n = instance.task_count();
    if durations.len() != n {
        return Err(ExecutionError::WrongLength { expected: n, got: durations.len() });
    }
    check_bounds(durations, instance.tasks().map(|(t, task)| u.task_bounds(task, solution.assignment[t])))?;
    let mut machine_pred = vec![None; n];
    for seq in &solution.machine_sequences {
        for w in seq.windows(2) {
            machine_pred[w[1]] = Some(w[0]);
        }
    }
    // planned starts are a topological order of job and machine arcs
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&t| (solution.start[t], t));
    let mut start = vec![0; n];
    let mut finish = vec![0; n];
    for &t in &order {
        let mut s = solution.start[t];
        let job_first = instance.job_tasks(instance.job_of(t)).start;
        if t > job_first {
            s = s.max(finish[t - 1]);
        }
        if let Some(p) = machine_pred[t] {
            s = s.max(finish[p]);
        }
        start[t] = s;
        finish[t] = s + durations[t];
    }
    let job_completion: Vec<Tu> = (0..instance.job_count()).map(|j| finish[instance.job_tasks(j).end - 1]).collect();
    let mut by_start: Vec<usize> = (0..n).collect();
    by_start.sort_by_key(|&t| (start[t], t));
    Ok(ExecutionTrace {
        sampled_durations: durations.to_vec(),
        realized_makespan: finish.iter().copied().max().unwrap_or(0),
        per_job_earliness: vec![0; job_completion.len()],
        per_job_tardiness: vec![0; job_completion.len()],
        job_completion,
        task_start: start,
        dispatch_order: by_start,
        ..Default::default()
    })
}
