//! Deadline-aware FJSP solver.
//!
//! Objective: `C_max + sum_j (w_e * E_j + w_t * T_j)` on nominal durations.
//! Hard mode additionally requires every job to complete by its deadline.

mod descent;
mod greedy;
mod search;
mod timing;

use crate::instance::{DeadlineSpec, Instance, JobId, MachineId, ModeOption, TaskId, Tu};
use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub w_e: i64,
    pub w_t: i64,
}

impl ObjectiveWeights {
    pub fn new(w_e: i64, w_t: i64) -> Self {
        ObjectiveWeights { w_e, w_t }
    }
}

/// Search effort caps. The node budget is what makes results reproducible;
/// the wall-clock limit is only a safety net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub weights: ObjectiveWeights,
    pub deadlines: DeadlineSpec,
    pub time_limit: Duration,
    pub seed: u64,
    /// Branch-and-bound nodes allowed above the exhaustive threshold.
    pub node_limit: u64,
    /// Sequences timed by the local descent that polishes the warm start.
    pub descent_evals: u64,
    /// Instances with at most this many tasks...
    pub exhaustive_max_tasks: usize,
    /// ...and at most this many mode combinations are searched without a node budget.
    pub exhaustive_max_mode_combinations: u64,
}

impl SolveConfig {
    pub fn new(weights: ObjectiveWeights, deadlines: DeadlineSpec) -> Self {
        SolveConfig {
            weights,
            deadlines,
            time_limit: Duration::from_secs(60),
            seed: 0,
            node_limit: 200_000,
            descent_evals: 20_000,
            exhaustive_max_tasks: 12,
            exhaustive_max_mode_combinations: 64,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("hard deadlines cannot be met at nominal durations: {0}")]
    Infeasible(String),
    #[error("search budget exhausted before any feasible schedule was found")]
    TimeLimitNoSolution,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("inconsistent solution: {0}")]
    InconsistentSolution(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub makespan: Tu,
    pub total_earliness: Tu,
    pub total_tardiness: Tu,
    pub objective_value: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub leaves: u64,
    pub timing_lps: u64,
    /// Search finished without hitting a budget, so the objective is optimal.
    pub proven_optimal: bool,
    /// The wall-clock cap fired; the result may then vary between runs.
    pub time_limited: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub instance: String,
    pub assignment: Vec<ModeOption>,
    pub start: Vec<Tu>,
    pub machine_sequences: Vec<Vec<TaskId>>,
    pub job_completion: Vec<Tu>,
    pub makespan: Tu,
    pub objective_value: i64,
    pub terms: ObjectiveBreakdown,
    pub stats: SearchStats,
}

impl Solution {
    pub fn finish(&self, task: TaskId) -> Tu {
        self.start[task] + self.assignment[task].duration
    }

    pub fn optimal(&self) -> bool {
        self.stats.proven_optimal
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Penalty of one job finishing at `c` against deadline `d`.
pub(crate) fn penalty(w: ObjectiveWeights, d: Tu, c: Tu) -> i64 {
    w.w_e * (d - c).max(0) + w.w_t * (c - d).max(0)
}

/// Recomputes makespan, earliness, tardiness and objective from the start
/// times and checks them against the values recorded in the solution.
pub fn objective_breakdown(
    instance: &Instance,
    solution: &Solution,
    deadlines: &DeadlineSpec,
    weights: ObjectiveWeights,
) -> Result<ObjectiveBreakdown, SolveError> {
    let n = instance.task_count();
    if solution.start.len() != n || solution.assignment.len() != n {
        return Err(SolveError::InconsistentSolution(format!(
            "expected {n} tasks, solution has {} starts and {} assignments",
            solution.start.len(),
            solution.assignment.len()
        )));
    }
    if deadlines.per_job.len() != instance.job_count() || solution.job_completion.len() != instance.job_count() {
        return Err(SolveError::InconsistentSolution("job count mismatch".into()));
    }
    let mut out = ObjectiveBreakdown::default();
    for j in 0..instance.job_count() {
        let c = instance.job_tasks(j).map(|t| solution.finish(t)).max().unwrap_or(0);
        if c != solution.job_completion[j] {
            return Err(SolveError::InconsistentSolution(format!(
                "job {j} completes at {c}, recorded {}",
                solution.job_completion[j]
            )));
        }
        let d = deadlines.per_job[j];
        out.makespan = out.makespan.max(c);
        out.total_earliness += (d - c).max(0);
        out.total_tardiness += (c - d).max(0);
    }
    out.objective_value = out.makespan + weights.w_e * out.total_earliness + weights.w_t * out.total_tardiness;
    if out.makespan != solution.makespan || out.objective_value != solution.objective_value {
        return Err(SolveError::InconsistentSolution(format!(
            "recomputed makespan {} / objective {}, recorded {} / {}",
            out.makespan, out.objective_value, solution.makespan, solution.objective_value
        )));
    }
    Ok(out)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditError {
    #[error("shape: {0}")]
    Shape(String),
    #[error("task {task}: mode {mode:?} is not one of its options")]
    UnknownMode { task: TaskId, mode: ModeOption },
    #[error("task {task} starts at negative time {start}")]
    NegativeStart { task: TaskId, start: Tu },
    #[error("task {task} starts before its job predecessor {pred} finishes")]
    Precedence { task: TaskId, pred: TaskId },
    #[error("tasks {a} and {b} overlap on machine {machine}")]
    Overlap { machine: MachineId, a: TaskId, b: TaskId },
    #[error("machine {machine}: sequence does not list its tasks in start order")]
    Sequence { machine: MachineId },
    #[error("job {job} completes at {completion}, after its hard deadline {deadline}")]
    Deadline { job: JobId, completion: Tu, deadline: Tu },
    #[error("recorded completion or makespan does not match start times")]
    Completion,
}

/// Independent feasibility check: mode membership, precedence, machine
/// capacity, sequence bookkeeping and (when given and hard) deadlines.
pub fn audit(instance: &Instance, solution: &Solution, deadlines: Option<&DeadlineSpec>) -> Result<(), AuditError> {
    let n = instance.task_count();
    if solution.start.len() != n || solution.assignment.len() != n {
        return Err(AuditError::Shape("task vectors have the wrong length".into()));
    }
    if solution.machine_sequences.len() != instance.machine_count() {
        return Err(AuditError::Shape("one sequence per machine expected".into()));
    }
    for (t, task) in instance.tasks() {
        let mode = solution.assignment[t];
        if !task.modes.contains(&mode) {
            return Err(AuditError::UnknownMode { task: t, mode });
        }
        if solution.start[t] < 0 {
            return Err(AuditError::NegativeStart { task: t, start: solution.start[t] });
        }
        if task.index_in_job > 0 && solution.start[t] < solution.finish(t - 1) {
            return Err(AuditError::Precedence { task: t, pred: t - 1 });
        }
    }
    for m in 0..instance.machine_count() {
        let mut on_m: Vec<TaskId> = (0..n).filter(|&t| solution.assignment[t].machine == m).collect();
        on_m.sort_by_key(|&t| (solution.start[t], t));
        for w in on_m.windows(2) {
            if solution.finish(w[0]) > solution.start[w[1]] {
                return Err(AuditError::Overlap { machine: m, a: w[0], b: w[1] });
            }
        }
        if solution.machine_sequences[m] != on_m {
            return Err(AuditError::Sequence { machine: m });
        }
    }
    let mut cmax = 0;
    for j in 0..instance.job_count() {
        let c = instance.job_tasks(j).map(|t| solution.finish(t)).max().unwrap_or(0);
        if solution.job_completion.get(j) != Some(&c) {
            return Err(AuditError::Completion);
        }
        cmax = cmax.max(c);
        if let Some(d) = deadlines.filter(|d| d.is_hard()) {
            if c > d.per_job[j] {
                return Err(AuditError::Deadline { job: j, completion: c, deadline: d.per_job[j] });
            }
        }
    }
    if cmax != solution.makespan {
        return Err(AuditError::Completion);
    }
    Ok(())
}

/// Precomputed, search-friendly view of an instance plus the objective.
pub(crate) struct Prepared<'a> {
    pub inst: &'a Instance,
    pub n: usize,
    pub jobs: usize,
    pub machines: usize,
    pub weights: ObjectiveWeights,
    pub deadline: Vec<Tu>,
    pub hard: bool,
    pub job_of: Vec<JobId>,
    pub job_first: Vec<TaskId>,
    pub job_last: Vec<TaskId>,
    /// Modes sorted by (duration, machine).
    pub modes: Vec<Vec<ModeOption>>,
    pub min_dur: Vec<Tu>,
    /// Sum of minimum durations of the tasks strictly after `t` in its job.
    pub rem_after: Vec<Tu>,
    /// Machine of each single-mode task, if any.
    pub fixed_machine: Vec<Option<MachineId>>,
}

impl<'a> Prepared<'a> {
    pub fn new(inst: &'a Instance, weights: ObjectiveWeights, deadlines: &DeadlineSpec) -> Self {
        let n = inst.task_count();
        let mut modes = Vec::with_capacity(n);
        let mut job_of = Vec::with_capacity(n);
        let mut fixed_machine = Vec::with_capacity(n);
        for (_, t) in inst.tasks() {
            let mut ms = t.modes.clone();
            ms.sort_by_key(|m| (m.duration, m.machine));
            fixed_machine.push((ms.len() == 1).then(|| ms[0].machine));
            modes.push(ms);
            job_of.push(t.job);
        }
        let min_dur: Vec<Tu> = modes.iter().map(|ms| ms[0].duration).collect();
        let mut rem_after = vec![0; n];
        let mut job_first = Vec::new();
        let mut job_last = Vec::new();
        for j in 0..inst.job_count() {
            let r = inst.job_tasks(j);
            job_first.push(r.start);
            job_last.push(r.end - 1);
            let mut acc = 0;
            for t in r.rev() {
                rem_after[t] = acc;
                acc += min_dur[t];
            }
        }
        Prepared {
            inst,
            n,
            jobs: inst.job_count(),
            machines: inst.machine_count(),
            weights,
            deadline: deadlines.per_job.clone(),
            hard: deadlines.is_hard(),
            job_of,
            job_first,
            job_last,
            modes,
            min_dur,
            rem_after,
            fixed_machine,
        }
    }

    pub fn job_min_work(&self, j: JobId) -> Tu {
        self.min_dur[self.job_first[j]] + self.rem_after[self.job_first[j]]
    }

    pub fn objective_of(&self, completion: &[Tu]) -> i64 {
        let cmax = completion.iter().copied().max().unwrap_or(0);
        cmax + (0..self.jobs).map(|j| penalty(self.weights, self.deadline[j], completion[j])).sum::<i64>()
    }

    /// Lower bound on the objective given per-job completion lower bounds
    /// and a makespan lower bound: each job is free to finish anywhere in
    /// `[c_lb_j, M]`, and `M >= cmax_lb`. Returns None when hard deadlines
    /// cannot all be met.
    pub fn relaxed_objective(&self, c_lb: &[Tu], cmax_lb: Tu) -> Option<i64> {
        if self.hard && (0..self.jobs).any(|j| c_lb[j] > self.deadline[j]) {
            return None;
        }
        let eval = |m: Tu| -> i64 {
            m + (0..self.jobs)
                .map(|j| penalty(self.weights, self.deadline[j], self.deadline[j].clamp(c_lb[j], m.max(c_lb[j]))))
                .sum::<i64>()
        };
        let mut best = eval(cmax_lb);
        if self.weights.w_e > 0 {
            for &d in &self.deadline {
                if d > cmax_lb {
                    best = best.min(eval(d));
                }
            }
        }
        Some(best)
    }
}

/// A complete sequence (modes + machine predecessor links) together with
/// its semi-active start times.
#[derive(Debug, Clone)]
pub(crate) struct Sequenced {
    pub mode: Vec<ModeOption>,
    pub mpred: Vec<Option<TaskId>>,
    pub start: Vec<Tu>,
}

impl Sequenced {
    /// Semi-active schedule obtained by appending tasks in `order`; each
    /// task's job predecessor must come earlier in the order.
    pub fn from_order(p: &Prepared, order: &[(TaskId, ModeOption)]) -> Self {
        let mut mode = vec![ModeOption { machine: 0, duration: 0 }; p.n];
        let mut mpred = vec![None; p.n];
        let mut start = vec![0; p.n];
        let mut mach_last: Vec<Option<TaskId>> = vec![None; p.machines];
        let mut mach_ready = vec![0; p.machines];
        let mut job_ready = vec![0; p.jobs];
        for &(t, m) in order {
            let j = p.job_of[t];
            let s = job_ready[j].max(mach_ready[m.machine]);
            mode[t] = m;
            start[t] = s;
            mpred[t] = mach_last[m.machine];
            mach_last[m.machine] = Some(t);
            mach_ready[m.machine] = s + m.duration;
            job_ready[j] = s + m.duration;
        }
        Sequenced { mode, mpred, start }
    }

    pub fn completions(&self, p: &Prepared, start: &[Tu]) -> Vec<Tu> {
        p.job_last.iter().map(|&t| start[t] + self.mode[t].duration).collect()
    }
}

/// A fully timed candidate schedule.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub objective: i64,
    pub seq: Sequenced,
    pub start: Vec<Tu>,
}

impl Candidate {
    pub fn better_than(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => (self.objective, &self.start) < (o.objective, &o.start),
        }
    }
}

/// Optimal timing for a fixed sequence: semi-active when no job gains from
/// waiting, otherwise the exact retiming LP.
pub(crate) fn time_sequence(p: &Prepared, seq: Sequenced, bound: Option<i64>, lps: &mut u64) -> Option<Candidate> {
    let comp = seq.completions(p, &seq.start);
    if p.hard && (0..p.jobs).any(|j| comp[j] > p.deadline[j]) {
        return None;
    }
    let obj_sa = p.objective_of(&comp);
    let gains_from_waiting = p.weights.w_e > 0 && (0..p.jobs).any(|j| comp[j] < p.deadline[j]);
    if !gains_from_waiting {
        let start = seq.start.clone();
        return Some(Candidate { objective: obj_sa, seq, start });
    }
    let cmax = comp.iter().copied().max().unwrap_or(0);
    let lb = p.relaxed_objective(&comp, cmax)?;
    if lb == obj_sa {
        let start = seq.start.clone();
        return Some(Candidate { objective: obj_sa, seq, start });
    }
    if let Some(b) = bound {
        if lb >= b {
            return None;
        }
    }
    *lps += 1;
    match timing::retime(p, &seq) {
        Some((objective, start)) if objective <= obj_sa => Some(Candidate { objective, seq, start }),
        _ => {
            let start = seq.start.clone();
            Some(Candidate { objective: obj_sa, seq, start })
        }
    }
}

/// Warm starts that get a share of the descent budget.
const DESCENT_STARTS: usize = 8;

fn empty_solution(instance: &Instance) -> Solution {
    Solution {
        instance: instance.name.clone(),
        assignment: Vec::new(),
        start: Vec::new(),
        machine_sequences: vec![Vec::new(); instance.machine_count()],
        job_completion: Vec::new(),
        makespan: 0,
        objective_value: 0,
        terms: ObjectiveBreakdown::default(),
        stats: SearchStats { proven_optimal: true, ..Default::default() },
    }
}

fn to_solution(p: &Prepared, cand: &Candidate, stats: SearchStats) -> Solution {
    let start = cand.start.clone();
    let assignment = cand.seq.mode.clone();
    let mut machine_sequences = vec![Vec::new(); p.machines];
    for t in 0..p.n {
        machine_sequences[assignment[t].machine].push(t);
    }
    for seq in &mut machine_sequences {
        seq.sort_by_key(|&t| (start[t], t));
    }
    let job_completion: Vec<Tu> = p.job_last.iter().map(|&t| start[t] + assignment[t].duration).collect();
    let mut terms = ObjectiveBreakdown { makespan: job_completion.iter().copied().max().unwrap_or(0), ..Default::default() };
    for j in 0..p.jobs {
        terms.total_earliness += (p.deadline[j] - job_completion[j]).max(0);
        terms.total_tardiness += (job_completion[j] - p.deadline[j]).max(0);
    }
    terms.objective_value = terms.makespan + p.weights.w_e * terms.total_earliness + p.weights.w_t * terms.total_tardiness;
    debug_assert_eq!(terms.objective_value, cand.objective);
    Solution {
        instance: p.inst.name.clone(),
        assignment,
        start,
        machine_sequences,
        job_completion,
        makespan: terms.makespan,
        objective_value: terms.objective_value,
        terms,
        stats,
    }
}

pub fn solve(instance: &Instance, config: &SolveConfig) -> Result<Solution, SolveError> {
    if config.deadlines.per_job.len() != instance.job_count() {
        return Err(SolveError::InvalidConfig(format!(
            "{} deadlines for {} jobs",
            config.deadlines.per_job.len(),
            instance.job_count()
        )));
    }
    if config.weights.w_e < 0 || config.weights.w_t < 0 {
        return Err(SolveError::InvalidConfig("weights must be non-negative".into()));
    }
    if config.time_limit.is_zero() {
        return Err(SolveError::InvalidConfig("time limit must be positive".into()));
    }
    if instance.job_count() == 0 {
        return Ok(empty_solution(instance));
    }
    let p = Prepared::new(instance, config.weights, &config.deadlines);
    if p.hard {
        for j in 0..p.jobs {
            if p.job_min_work(j) > p.deadline[j] {
                return Err(SolveError::Infeasible(format!(
                    "job {j} needs at least {} tu but its deadline is {}",
                    p.job_min_work(j),
                    p.deadline[j]
                )));
            }
        }
    }

    let combos = instance
        .tasks()
        .try_fold(1u64, |acc, (_, t)| acc.checked_mul(t.modes.len() as u64))
        .unwrap_or(u64::MAX);
    let exhaustive = p.n <= config.exhaustive_max_tasks && combos <= config.exhaustive_max_mode_combinations;

    let mut lps = 0;
    let starts = greedy::warm_starts(&p, config.seed, &mut lps);
    let mut incumbent: Option<Candidate> = None;
    let polish = if exhaustive { 0 } else { DESCENT_STARTS.min(starts.len()) };
    for (k, c) in starts.into_iter().enumerate() {
        let c = if k < polish { descent::improve(&p, c, config.descent_evals / polish as u64, &mut lps) } else { c };
        if c.better_than(&incumbent) {
            incumbent = Some(c);
        }
    }
    let outcome = search::run(&p, &mut incumbent, config, exhaustive);
    let stats = SearchStats {
        nodes: outcome.nodes,
        leaves: outcome.leaves,
        timing_lps: outcome.timing_lps + lps,
        proven_optimal: outcome.complete,
        time_limited: outcome.time_limited,
    };
    match incumbent {
        Some(c) => Ok(to_solution(&p, &c, stats)),
        None if outcome.complete => {
            Err(SolveError::Infeasible("no sequence meets every hard deadline at nominal durations".into()))
        }
        None => Err(SolveError::TimeLimitNoSolution),
    }
}
