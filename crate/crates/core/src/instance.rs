//! Flexible job-shop instances, duration uncertainty and per-job deadlines,
//! plus the `.fjs` text format.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Integer time unit used everywhere.
pub type Tu = i64;
pub type MachineId = usize;
pub type JobId = usize;
/// Global task index: tasks of job 0 first, then job 1, and so on.
pub type TaskId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeOption {
    pub machine: MachineId,
    pub duration: Tu,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub job: JobId,
    pub index_in_job: usize,
    pub modes: Vec<ModeOption>,
}

impl Task {
    /// Mode with the smallest nominal duration, lowest machine id on ties.
    pub fn fastest_mode(&self) -> ModeOption {
        *self
            .modes
            .iter()
            .min_by_key(|m| (m.duration, m.machine))
            .expect("task has at least one mode")
    }

    pub fn mode_on(&self, machine: MachineId) -> Option<ModeOption> {
        self.modes.iter().copied().find(|m| m.machine == machine)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("job {job} has no tasks")]
    EmptyJob { job: JobId },
    #[error("task {index} of job {job} has no modes")]
    EmptyTask { job: JobId, index: usize },
    #[error("task {index} of job {job}: duration {duration} is not positive")]
    NonPositiveDuration { job: JobId, index: usize, duration: Tu },
    #[error("task {index} of job {job}: machine {machine} out of range (machine count {machine_count})")]
    MachineOutOfRange { job: JobId, index: usize, machine: MachineId, machine_count: usize },
    #[error("task {index} of job {job}: machine {machine} listed twice")]
    DuplicateMachine { job: JobId, index: usize, machine: MachineId },
    #[error("machine count must be positive")]
    NoMachines,
    #[error("unknown job {0}")]
    UnknownJob(JobId),
    #[error("invalid uncertainty factor {0}")]
    InvalidAlpha(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    pub name: String,
    machine_count: usize,
    jobs: Vec<Vec<Task>>,
    offsets: Vec<TaskId>,
}

impl Instance {
    /// Builds an instance from per-job lists of per-task mode lists.
    pub fn new(
        name: impl Into<String>,
        machine_count: usize,
        jobs: Vec<Vec<Vec<ModeOption>>>,
    ) -> Result<Self, InstanceError> {
        if machine_count == 0 {
            return Err(InstanceError::NoMachines);
        }
        let mut out = Vec::with_capacity(jobs.len());
        for (j, tasks) in jobs.into_iter().enumerate() {
            if tasks.is_empty() {
                return Err(InstanceError::EmptyJob { job: j });
            }
            let mut row = Vec::with_capacity(tasks.len());
            for (i, modes) in tasks.into_iter().enumerate() {
                if modes.is_empty() {
                    return Err(InstanceError::EmptyTask { job: j, index: i });
                }
                for (k, m) in modes.iter().enumerate() {
                    if m.duration < 1 {
                        return Err(InstanceError::NonPositiveDuration { job: j, index: i, duration: m.duration });
                    }
                    if m.machine >= machine_count {
                        return Err(InstanceError::MachineOutOfRange {
                            job: j,
                            index: i,
                            machine: m.machine,
                            machine_count,
                        });
                    }
                    if modes[..k].iter().any(|o| o.machine == m.machine) {
                        return Err(InstanceError::DuplicateMachine { job: j, index: i, machine: m.machine });
                    }
                }
                row.push(Task { job: j, index_in_job: i, modes });
            }
            out.push(row);
        }
        let mut inst = Instance { name: name.into(), machine_count, jobs: out, offsets: Vec::new() };
        inst.rebuild_offsets();
        Ok(inst)
    }

    fn rebuild_offsets(&mut self) {
        self.offsets.clear();
        let mut acc = 0;
        for job in &self.jobs {
            self.offsets.push(acc);
            acc += job.len();
        }
        self.offsets.push(acc);
    }

    pub fn machine_count(&self) -> usize {
        self.machine_count
    }

    pub fn job_count(&self) -> usize {
        self.jobs.len()
    }

    pub fn task_count(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn jobs(&self) -> &[Vec<Task>] {
        &self.jobs
    }

    pub fn job(&self, job: JobId) -> Option<&[Task]> {
        self.jobs.get(job).map(|v| v.as_slice())
    }

    /// Global ids of the tasks of `job`, in route order.
    pub fn job_tasks(&self, job: JobId) -> std::ops::Range<TaskId> {
        self.offsets[job]..self.offsets[job + 1]
    }

    pub fn task_id(&self, job: JobId, index: usize) -> TaskId {
        self.offsets[job] + index
    }

    pub fn task(&self, id: TaskId) -> &Task {
        let job = self.job_of(id);
        &self.jobs[job][id - self.offsets[job]]
    }

    pub fn job_of(&self, id: TaskId) -> JobId {
        // offsets is sorted; the owning job is the last offset <= id
        self.offsets.partition_point(|&o| o <= id) - 1
    }

    pub fn tasks(&self) -> impl Iterator<Item = (TaskId, &Task)> {
        self.jobs.iter().flatten().enumerate()
    }

    /// Mean number of modes per task (the optional third header token).
    pub fn average_flexibility(&self) -> f64 {
        let n = self.task_count();
        if n == 0 {
            return 0.0;
        }
        self.tasks().map(|(_, t)| t.modes.len()).sum::<usize>() as f64 / n as f64
    }
}

/// Serialized shape of an instance: per-job lists of per-task mode lists.
#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    name: String,
    machine_count: usize,
    jobs: Vec<Vec<Vec<ModeOption>>>,
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = InstanceError;
    fn try_from(r: InstanceRepr) -> Result<Self, Self::Error> {
        Instance::new(r.name, r.machine_count, r.jobs)
    }
}

impl From<Instance> for InstanceRepr {
    fn from(i: Instance) -> Self {
        InstanceRepr {
            name: i.name,
            machine_count: i.machine_count,
            jobs: i.jobs.into_iter().map(|j| j.into_iter().map(|t| t.modes).collect()).collect(),
        }
    }
}

/// Non-negative rational stored in lowest terms, so that bounds such as
/// floor(10 * 0.3) come out exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alpha {
    num: i64,
    den: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a.abs()
}

impl Alpha {
    pub const ZERO: Alpha = Alpha { num: 0, den: 1 };

    pub fn new(num: i64, den: i64) -> Result<Self, InstanceError> {
        if den <= 0 || num < 0 {
            return Err(InstanceError::InvalidAlpha(format!("{num}/{den}")));
        }
        let g = gcd(num, den).max(1);
        Ok(Alpha { num: num / g, den: den / g })
    }

    /// Converts a decimal value, snapping to the shortest decimal expansion
    /// of at most six digits that reproduces it.
    pub fn from_f64(value: f64) -> Result<Self, InstanceError> {
        if !value.is_finite() || value < 0.0 {
            return Err(InstanceError::InvalidAlpha(value.to_string()));
        }
        let mut den = 1i64;
        for _ in 0..=6 {
            let scaled = value * den as f64;
            if (scaled - scaled.round()).abs() < 1e-9 * den as f64 {
                return Alpha::new(scaled.round() as i64, den);
            }
            den *= 10;
        }
        Err(InstanceError::InvalidAlpha(value.to_string()))
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn numer(self) -> i64 {
        self.num
    }

    pub fn denom(self) -> i64 {
        self.den
    }

    /// floor(d * (1 - alpha))
    fn floor_shrink(self, d: Tu) -> Tu {
        (d * (self.den - self.num)).div_euclid(self.den)
    }

    /// ceil(d * (1 + alpha))
    fn ceil_stretch(self, d: Tu) -> Tu {
        let n = d * (self.den + self.num);
        -((-n).div_euclid(self.den))
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

impl std::str::FromStr for Alpha {
    type Err = InstanceError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse().map_err(|_| InstanceError::InvalidAlpha(s.into()))?;
            let d = d.trim().parse().map_err(|_| InstanceError::InvalidAlpha(s.into()))?;
            return Alpha::new(n, d);
        }
        let v: f64 = s.trim().parse().map_err(|_| InstanceError::InvalidAlpha(s.into()))?;
        Alpha::from_f64(v)
    }
}

/// Which nominal duration feeds a task's contingent interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsConvention {
    /// Bounds from the assigned mode's own duration.
    #[default]
    PerMode,
    /// Envelope over all modes: [(1-a) * min d, (1+a) * max d].
    ModeEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UncertaintyModel {
    pub alpha: Alpha,
    #[serde(default)]
    pub convention: BoundsConvention,
}

impl UncertaintyModel {
    pub fn new(alpha: Alpha) -> Self {
        UncertaintyModel { alpha, convention: BoundsConvention::PerMode }
    }

    pub fn with_convention(mut self, convention: BoundsConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Contingent interval for a task executed in `mode`, honouring the
    /// configured convention.
    pub fn task_bounds(&self, task: &Task, mode: ModeOption) -> (Tu, Tu) {
        match self.convention {
            BoundsConvention::PerMode => duration_bounds(mode, self),
            BoundsConvention::ModeEnvelope => envelope_bounds(task, self),
        }
    }

    /// Interval used by the closed-form critical slack: the fastest mode
    /// under the per-mode convention, the envelope otherwise.
    pub fn reference_bounds(&self, task: &Task) -> (Tu, Tu) {
        match self.convention {
            BoundsConvention::PerMode => duration_bounds(task.fastest_mode(), self),
            BoundsConvention::ModeEnvelope => envelope_bounds(task, self),
        }
    }
}

/// `(max(1, floor(d(1-a))), ceil(d(1+a)))` for one mode.
pub fn duration_bounds(mode: ModeOption, u: &UncertaintyModel) -> (Tu, Tu) {
    let lower = u.alpha.floor_shrink(mode.duration).max(1);
    let upper = u.alpha.ceil_stretch(mode.duration);
    (lower, upper.max(lower))
}

fn envelope_bounds(task: &Task, u: &UncertaintyModel) -> (Tu, Tu) {
    let dmin = task.modes.iter().map(|m| m.duration).min().unwrap_or(1);
    let dmax = task.modes.iter().map(|m| m.duration).max().unwrap_or(1);
    let lower = u.alpha.floor_shrink(dmin).max(1);
    (lower, u.alpha.ceil_stretch(dmax).max(lower))
}

/// Smallest lower duration bound over the modes of a task.
pub fn min_lower_bound(task: &Task, u: &UncertaintyModel) -> Tu {
    task.modes.iter().map(|&m| duration_bounds(m, u).0).min().unwrap_or(1)
}

/// Sum over the job's tasks of the smallest lower bound, plus `delta`.
pub fn job_deadline(instance: &Instance, job: JobId, u: &UncertaintyModel, delta: Tu) -> Result<Tu, InstanceError> {
    let tasks = instance.job(job).ok_or(InstanceError::UnknownJob(job))?;
    Ok(tasks.iter().map(|t| min_lower_bound(t, u)).sum::<Tu>() + delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadlineMode {
    #[default]
    Soft,
    Hard,
}

impl fmt::Display for DeadlineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeadlineMode::Soft => "soft",
            DeadlineMode::Hard => "hard",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadlineSpec {
    pub mode: DeadlineMode,
    pub delta: Tu,
    pub per_job: Vec<Tu>,
}

impl DeadlineSpec {
    /// Deadlines `D_j = job_deadline(j, u, delta)` for every job.
    pub fn derive(instance: &Instance, u: &UncertaintyModel, mode: DeadlineMode, delta: Tu) -> Self {
        let per_job = (0..instance.job_count())
            .map(|j| job_deadline(instance, j, u, delta).expect("job in range"))
            .collect();
        DeadlineSpec { mode, delta, per_job }
    }

    /// Explicit deadlines, for hand-built experiments.
    pub fn explicit(mode: DeadlineMode, per_job: Vec<Tu>) -> Self {
        DeadlineSpec { mode, delta: 0, per_job }
    }

    pub fn deadline(&self, job: JobId) -> Tu {
        self.per_job[job]
    }

    pub fn is_hard(&self) -> bool {
        self.mode == DeadlineMode::Hard
    }
}

// ---------------------------------------------------------------------------
// .fjs format

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, token {token}: malformed header: {reason}")]
    MalformedHeader { line: usize, token: usize, reason: String },
    #[error("line {line}, token {token}: job line ends early, expected {expected}")]
    TruncatedJobLine { line: usize, token: usize, expected: &'static str },
    #[error("line {line}, token {token}: machine {machine} out of range 1..={machine_count}")]
    MachineIdOutOfRange { line: usize, token: usize, machine: i64, machine_count: usize },
    #[error("line {line}, token {token}: invalid integer {text:?}")]
    InvalidToken { line: usize, token: usize, text: String },
    #[error("line {line}, token {token}: {reason}")]
    InvalidValue { line: usize, token: usize, reason: String },
    #[error("line {line}, token {token}: unexpected trailing data")]
    TrailingData { line: usize, token: usize },
    #[error("expected {expected} job lines, found {found}")]
    MissingJobLines { expected: usize, found: usize },
}

/// Line and token positions below are 1-based.
pub fn parse_fjs(text: &str) -> Result<Instance, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, toks)| !toks.is_empty());

    let (hline, header) = lines.next().ok_or(ParseError::MalformedHeader {
        line: 1,
        token: 1,
        reason: "empty input".into(),
    })?;
    if header.len() < 2 || header.len() > 3 {
        return Err(ParseError::MalformedHeader {
            line: hline,
            token: header.len().min(2) + 1,
            reason: format!("expected 2 or 3 tokens, found {}", header.len()),
        });
    }
    let header_int = |k: usize| -> Result<i64, ParseError> {
        header[k].parse::<i64>().map_err(|_| ParseError::MalformedHeader {
            line: hline,
            token: k + 1,
            reason: format!("{:?} is not an integer", header[k]),
        })
    };
    let n_jobs = header_int(0)?;
    let n_machines = header_int(1)?;
    if n_jobs < 0 {
        return Err(ParseError::MalformedHeader { line: hline, token: 1, reason: "negative job count".into() });
    }
    if n_machines < 1 {
        return Err(ParseError::MalformedHeader { line: hline, token: 2, reason: "machine count must be positive".into() });
    }
    if let Some(flex) = header.get(2) {
        if flex.parse::<f64>().map(|v| !v.is_finite()).unwrap_or(true) {
            return Err(ParseError::MalformedHeader {
                line: hline,
                token: 3,
                reason: format!("{flex:?} is not a number"),
            });
        }
    }
    let n_jobs = n_jobs as usize;
    let machine_count = n_machines as usize;

    let mut jobs = Vec::with_capacity(n_jobs);
    for found in 0..n_jobs {
        let (line, toks) = lines.next().ok_or(ParseError::MissingJobLines { expected: n_jobs, found })?;
        jobs.push(parse_job_line(line, &toks, machine_count)?);
    }
    if let Some((line, _)) = lines.next() {
        return Err(ParseError::TrailingData { line, token: 1 });
    }
    Instance::new("", machine_count, jobs).map_err(|e| ParseError::InvalidValue {
        line: hline,
        token: 1,
        reason: e.to_string(),
    })
}

fn parse_job_line(line: usize, toks: &[&str], machine_count: usize) -> Result<Vec<Vec<ModeOption>>, ParseError> {
    let mut pos = 0usize;
    let mut next = |expected: &'static str| -> Result<(usize, i64), ParseError> {
        let tok = toks.get(pos).ok_or(ParseError::TruncatedJobLine { line, token: pos + 1, expected })?;
        pos += 1;
        tok.parse::<i64>()
            .map(|v| (pos, v))
            .map_err(|_| ParseError::InvalidToken { line, token: pos, text: (*tok).to_string() })
    };
    let (tk, n_ops) = next("operation count")?;
    if n_ops < 1 {
        return Err(ParseError::InvalidValue { line, token: tk, reason: "a job needs at least one operation".into() });
    }
    let mut ops = Vec::with_capacity(n_ops as usize);
    for _ in 0..n_ops {
        let (tk, n_modes) = next("mode count")?;
        if n_modes < 1 {
            return Err(ParseError::InvalidValue { line, token: tk, reason: "an operation needs at least one mode".into() });
        }
        let mut modes: Vec<ModeOption> = Vec::with_capacity(n_modes as usize);
        for _ in 0..n_modes {
            let (mt, machine) = next("machine id")?;
            if machine < 1 || machine as usize > machine_count {
                return Err(ParseError::MachineIdOutOfRange { line, token: mt, machine, machine_count });
            }
            let machine = machine as usize - 1;
            if modes.iter().any(|m| m.machine == machine) {
                return Err(ParseError::InvalidValue { line, token: mt, reason: format!("machine {} repeated", machine + 1) });
            }
            let (dt, duration) = next("duration")?;
            if duration < 1 {
                return Err(ParseError::InvalidValue { line, token: dt, reason: format!("duration {duration} is not positive") });
            }
            modes.push(ModeOption { machine, duration });
        }
        ops.push(modes);
    }
    if pos < toks.len() {
        return Err(ParseError::TrailingData { line, token: pos + 1 });
    }
    Ok(ops)
}

/// Writes the instance in `.fjs` layout with the average-flexibility token.
pub fn to_fjs(instance: &Instance) -> String {
    let mut out = format!(
        "{} {} {:.2}\n",
        instance.job_count(),
        instance.machine_count(),
        instance.average_flexibility()
    );
    for job in instance.jobs() {
        let mut toks = vec![job.len().to_string()];
        for task in job {
            toks.push(task.modes.len().to_string());
            for m in &task.modes {
                toks.push((m.machine + 1).to_string());
                toks.push(m.duration.to_string());
            }
        }
        out.push_str(&toks.join(" "));
        out.push('\n');
    }
    out
}
