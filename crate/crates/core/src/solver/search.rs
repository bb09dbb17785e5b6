//! Depth-first branch-and-bound over semi-active schedules.
//!
//! A node appends one (task, mode) pair at its earliest start. Appends are
//! restricted to non-decreasing (start, task id) order, so every semi-active
//! schedule is generated exactly once. Above the exhaustive threshold the
//! tree is walked by limited discrepancy: iteration k allows k deviations
//! from the heuristic child order, until the node budget runs out.

use super::{time_sequence, Candidate, Prepared, Sequenced, SolveConfig};
use crate::instance::{ModeOption, TaskId, Tu};
use std::time::Instant;

pub(crate) struct Outcome {
    pub nodes: u64,
    pub leaves: u64,
    pub timing_lps: u64,
    pub complete: bool,
    pub time_limited: bool,
}

struct Child {
    key: (i64, Tu, Tu, Tu, usize),
    task: TaskId,
    mode: ModeOption,
    start: Tu,
}

struct Undo {
    job_ready: Tu,
    mach_ready: Tu,
    mach_last: Option<TaskId>,
    last: Option<(Tu, TaskId)>,
    cmax: Tu,
}

struct Search<'p, 'i, 'b> {
    p: &'p Prepared<'i>,
    best: &'b mut Option<Candidate>,
    next: Vec<TaskId>,
    job_ready: Vec<Tu>,
    mach_ready: Vec<Tu>,
    mach_last: Vec<Option<TaskId>>,
    mode: Vec<ModeOption>,
    start: Vec<Tu>,
    mpred: Vec<Option<TaskId>>,
    last: Option<(Tu, TaskId)>,
    placed: usize,
    rem_work: Tu,
    fixed_rem: Vec<Tu>,
    cmax: Tu,
    c_lb: Vec<Tu>,
    nodes: u64,
    leaves: u64,
    lps: u64,
    node_limit: Option<u64>,
    time_cap: Instant,
    aborted: bool,
    time_limited: bool,
    cut: bool,
}

impl<'p, 'i, 'b> Search<'p, 'i, 'b> {
    fn new(p: &'p Prepared<'i>, best: &'b mut Option<Candidate>, config: &SolveConfig, exhaustive: bool) -> Self {
        let mut fixed_rem = vec![0; p.machines];
        for t in 0..p.n {
            if let Some(m) = p.fixed_machine[t] {
                fixed_rem[m] += p.min_dur[t];
            }
        }
        Search {
            p,
            best,
            next: p.job_first.clone(),
            job_ready: vec![0; p.jobs],
            mach_ready: vec![0; p.machines],
            mach_last: vec![None; p.machines],
            mode: vec![ModeOption { machine: 0, duration: 0 }; p.n],
            start: vec![0; p.n],
            mpred: vec![None; p.n],
            last: None,
            placed: 0,
            rem_work: p.min_dur.iter().sum(),
            fixed_rem,
            cmax: 0,
            c_lb: vec![0; p.jobs],
            nodes: 0,
            leaves: 0,
            lps: 0,
            node_limit: (!exhaustive).then_some(config.node_limit),
            time_cap: Instant::now() + config.time_limit,
            aborted: false,
            time_limited: false,
            cut: false,
        }
    }

    fn bound(&self) -> Option<i64> {
        self.best.as_ref().map(|b| b.objective)
    }

    /// Objective lower bound for every completion of the current partial
    /// schedule; None if a hard deadline is already out of reach.
    fn lower_bound(&mut self) -> Option<i64> {
        let p = self.p;
        let ls = self.last.map_or(0, |l| l.0);
        let mut cmax_lb = self.cmax;
        for j in 0..p.jobs {
            let t = self.next[j];
            self.c_lb[j] = if t > p.job_last[j] {
                self.job_ready[j]
            } else {
                let first = p.modes[t]
                    .iter()
                    .map(|m| self.job_ready[j].max(self.mach_ready[m.machine]).max(ls) + m.duration)
                    .min()
                    .unwrap_or(0);
                first + p.rem_after[t]
            };
            cmax_lb = cmax_lb.max(self.c_lb[j]);
        }
        let mut total = self.rem_work;
        for m in 0..p.machines {
            let ready = self.mach_ready[m].max(ls);
            total += ready;
            cmax_lb = cmax_lb.max(ready + self.fixed_rem[m]);
        }
        let machines = p.machines as Tu;
        cmax_lb = cmax_lb.max((total + machines - 1) / machines);
        p.relaxed_objective(&self.c_lb, cmax_lb)
    }

    fn apply(&mut self, c: &Child) -> Undo {
        let p = self.p;
        let j = p.job_of[c.task];
        let mc = c.mode.machine;
        let undo = Undo {
            job_ready: self.job_ready[j],
            mach_ready: self.mach_ready[mc],
            mach_last: self.mach_last[mc],
            last: self.last,
            cmax: self.cmax,
        };
        let end = c.start + c.mode.duration;
        self.mode[c.task] = c.mode;
        self.start[c.task] = c.start;
        self.mpred[c.task] = self.mach_last[mc];
        self.mach_last[mc] = Some(c.task);
        self.job_ready[j] = end;
        self.mach_ready[mc] = end;
        self.last = Some((c.start, c.task));
        self.cmax = self.cmax.max(end);
        self.next[j] += 1;
        self.placed += 1;
        self.rem_work -= p.min_dur[c.task];
        if p.fixed_machine[c.task].is_some() {
            self.fixed_rem[mc] -= c.mode.duration;
        }
        undo
    }

    fn undo(&mut self, c: &Child, u: Undo) {
        let p = self.p;
        let j = p.job_of[c.task];
        let mc = c.mode.machine;
        self.job_ready[j] = u.job_ready;
        self.mach_ready[mc] = u.mach_ready;
        self.mach_last[mc] = u.mach_last;
        self.last = u.last;
        self.cmax = u.cmax;
        self.next[j] -= 1;
        self.placed -= 1;
        self.rem_work += p.min_dur[c.task];
        if p.fixed_machine[c.task].is_some() {
            self.fixed_rem[mc] += c.mode.duration;
        }
    }

    fn leaf(&mut self) {
        self.leaves += 1;
        let seq = Sequenced { mode: self.mode.clone(), mpred: self.mpred.clone(), start: self.start.clone() };
        let bound = self.bound();
        if let Some(c) = time_sequence(self.p, seq, bound, &mut self.lps) {
            if c.better_than(self.best) {
                *self.best = Some(c);
            }
        }
    }

    fn children(&mut self) -> Vec<Child> {
        let p = self.p;
        let mut out = Vec::new();
        for j in 0..p.jobs {
            let t = self.next[j];
            if t > p.job_last[j] {
                continue;
            }
            let work = p.min_dur[t] + p.rem_after[t];
            for &m in &p.modes[t] {
                let s = self.job_ready[j].max(self.mach_ready[m.machine]);
                if let Some((ls, lt)) = self.last {
                    if s < ls || (s == ls && t < lt) {
                        continue;
                    }
                }
                if p.hard && s + m.duration + p.rem_after[t] > p.deadline[j] {
                    continue;
                }
                out.push(Child { key: (s, s + m.duration, work, m.duration, j), task: t, mode: m, start: s });
            }
        }
        // order by the bound of the child node; children that cannot beat
        // the incumbent are dropped here rather than one level down
        let bound = self.bound();
        let mut kept = Vec::with_capacity(out.len());
        for c in out {
            let u = self.apply(&c);
            let lb = self.lower_bound();
            self.undo(&c, u);
            match (lb, bound) {
                (None, _) => continue,
                (Some(lb), Some(b)) if lb >= b => continue,
                _ => {}
            }
            kept.push(c);
        }
        kept.sort_by_key(|c| (c.key, c.mode.machine));
        kept
    }

    fn dfs(&mut self, discrepancies: u32) {
        self.nodes += 1;
        if let Some(limit) = self.node_limit {
            if self.nodes > limit {
                self.aborted = true;
                return;
            }
        }
        if self.nodes % 512 == 0 && Instant::now() >= self.time_cap {
            self.aborted = true;
            self.time_limited = true;
            return;
        }
        if self.placed == self.p.n {
            self.leaf();
            return;
        }
        match (self.lower_bound(), self.bound()) {
            (None, _) => return,
            (Some(lb), Some(b)) if lb >= b => return,
            _ => {}
        }
        let kids = self.children();
        for (i, c) in kids.iter().enumerate() {
            let left = if i == 0 {
                discrepancies
            } else if discrepancies == 0 {
                self.cut = true;
                break;
            } else {
                discrepancies - 1
            };
            let u = self.apply(c);
            self.dfs(left);
            self.undo(c, u);
            if self.aborted {
                return;
            }
        }
    }
}

pub(crate) fn run(p: &Prepared, best: &mut Option<Candidate>, config: &SolveConfig, exhaustive: bool) -> Outcome {
    let mut s = Search::new(p, best, config, exhaustive);
    let mut complete = false;
    if exhaustive {
        s.dfs(u32::MAX);
        complete = !s.aborted;
    } else {
        for k in 0..=p.n as u32 {
            s.cut = false;
            s.dfs(k);
            if s.aborted {
                break;
            }
            if !s.cut {
                complete = true;
                break;
            }
        }
    }
    Outcome { nodes: s.nodes, leaves: s.leaves, timing_lps: s.lps, complete, time_limited: s.time_limited }
}
