//! Simple temporal networks with uncertainty, and the encoding of a solved
//! schedule as one.
//!
//! Requirement edges use the distance-graph convention: an edge
//! `from -> to` with weight `w` means `t(to) - t(from) <= w`.

mod format;

pub use format::{parse_stnu, write_stnu, FormatError};

use crate::instance::{DeadlineSpec, Instance, JobId, TaskId, Tu, UncertaintyModel};
use crate::solver::Solution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Origin,
    TaskStart,
    TaskFinish,
    JobFinish,
    /// Free-standing controllable time point (hand-built networks).
    Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimePoint {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Task id for start/finish nodes, job id for job-finish nodes.
    pub reference: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub weight: Tu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingentLink {
    pub activation: NodeId,
    pub contingent: NodeId,
    pub lower: Tu,
    pub upper: Tu,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StnuError {
    #[error("task {0} has no assigned mode or start")]
    UnassignedTask(TaskId),
    #[error("contingent link {activation}->{contingent} has bounds [{lower}, {upper}]")]
    NonPositiveBound { activation: NodeId, contingent: NodeId, lower: Tu, upper: Tu },
    #[error("edge references unknown node {0}")]
    UnknownNode(NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("node {0} is the target of more than one contingent link")]
    SharedContingent(NodeId),
    #[error("node {0} is both a contingent target and an activation point of a link it ends")]
    DegenerateLink(NodeId),
    #[error("solution and instance disagree: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stnu {
    pub nodes: Vec<TimePoint>,
    pub requirements: Vec<RequirementEdge>,
    pub contingents: Vec<ContingentLink>,
}

impl Stnu {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, kind: NodeKind, reference: Option<usize>) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(TimePoint { id, kind, reference });
        id
    }

    /// `t(to) - t(from) <= weight`
    pub fn add_requirement(&mut self, from: NodeId, to: NodeId, weight: Tu) {
        self.requirements.push(RequirementEdge { from, to, weight });
    }

    /// `lower <= t(to) - t(from) <= upper` as a pair of requirement edges.
    pub fn add_interval(&mut self, from: NodeId, to: NodeId, lower: Tu, upper: Tu) {
        self.add_requirement(from, to, upper);
        self.add_requirement(to, from, -lower);
    }

    pub fn add_contingent(&mut self, activation: NodeId, contingent: NodeId, lower: Tu, upper: Tu) {
        self.contingents.push(ContingentLink { activation, contingent, lower, upper });
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn origin(&self) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.kind == NodeKind::Origin).map(|n| n.id)
    }

    pub fn find(&self, kind: NodeKind, reference: usize) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.kind == kind && n.reference == Some(reference)).map(|n| n.id)
    }

    /// Index of the contingent link ending at each node, if any.
    pub fn contingent_of(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.nodes.len()];
        for (k, c) in self.contingents.iter().enumerate() {
            out[c.contingent] = Some(k);
        }
        out
    }

    /// Task referenced by each contingent link, for networks built from a
    /// schedule.
    pub fn contingent_tasks(&self) -> Vec<Option<TaskId>> {
        self.contingents
            .iter()
            .map(|c| {
                let n = self.nodes[c.contingent];
                (n.kind == NodeKind::TaskFinish).then_some(n.reference).flatten()
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), StnuError> {
        let n = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(StnuError::UnknownNode(node.id));
            }
        }
        for e in &self.requirements {
            for v in [e.from, e.to] {
                if v >= n {
                    return Err(StnuError::UnknownNode(v));
                }
            }
            if e.from == e.to {
                return Err(StnuError::SelfLoop(e.from));
            }
        }
        let mut seen = vec![false; n];
        for c in &self.contingents {
            for v in [c.activation, c.contingent] {
                if v >= n {
                    return Err(StnuError::UnknownNode(v));
                }
            }
            if c.activation == c.contingent {
                return Err(StnuError::SelfLoop(c.activation));
            }
            if c.lower <= 0 || c.lower > c.upper {
                return Err(StnuError::NonPositiveBound {
                    activation: c.activation,
                    contingent: c.contingent,
                    lower: c.lower,
                    upper: c.upper,
                });
            }
            if seen[c.contingent] {
                return Err(StnuError::SharedContingent(c.contingent));
            }
            seen[c.contingent] = true;
        }
        for c in &self.contingents {
            if seen[c.activation] && self.contingents.iter().any(|d| d.contingent == c.activation && d.activation == c.contingent) {
                return Err(StnuError::DegenerateLink(c.activation));
            }
        }
        Ok(())
    }

    /// Copy with every deadline arc (origin -> job finish) replaced by the
    /// given per-job values, adding arcs that are missing.
    pub fn with_deadline_arcs(&self, deadlines: &[Tu]) -> Stnu {
        let mut out = self.clone();
        let Some(origin) = self.origin() else { return out };
        let job_nodes: Vec<(NodeId, JobId)> = self
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::JobFinish)
            .filter_map(|n| n.reference.map(|j| (n.id, j)))
            .collect();
        out.requirements
            .retain(|e| !(e.from == origin && job_nodes.iter().any(|&(id, _)| id == e.to)));
        for (id, j) in job_nodes {
            if let Some(&d) = deadlines.get(j) {
                out.add_requirement(origin, id, d);
            }
        }
        out
    }
}

/// Closed-form edge count of [`build_stnu`] for a schedule: job
/// precedences, machine chains, deadline arcs (hard mode only), two
/// anchoring edges per job and one origin edge per task start.
pub fn expected_requirement_count(instance: &Instance, solution: &Solution, hard: bool) -> usize {
    let jobs = instance.job_count();
    let precedence: usize = instance.jobs().iter().map(|j| j.len() - 1).sum();
    let chains: usize = solution.machine_sequences.iter().map(|s| s.len().saturating_sub(1)).sum();
    precedence + chains + if hard { jobs } else { 0 } + 2 * jobs + instance.task_count()
}

/// Encodes a schedule: contingent durations, job precedence, machine order
/// as resource chains, job-finish anchors and (hard mode) deadline arcs.
///
/// Node layout: origin 0, task `t` start `1 + 2t` and finish `2 + 2t`,
/// job `j` finish `1 + 2|T| + j`. Nominal start times are not frozen; only
/// the machine order is.
pub fn build_stnu(
    solution: &Solution,
    instance: &Instance,
    u: &UncertaintyModel,
    deadlines: &DeadlineSpec,
) -> Result<Stnu, StnuError> {
    let n = instance.task_count();
    if solution.machine_sequences.len() != instance.machine_count() {
        return Err(StnuError::Mismatch("one machine sequence per machine expected".into()));
    }
    if deadlines.per_job.len() != instance.job_count() {
        return Err(StnuError::Mismatch("one deadline per job expected".into()));
    }
    if solution.assignment.len() < n || solution.start.len() < n {
        return Err(StnuError::UnassignedTask(solution.assignment.len().min(solution.start.len())));
    }
    let mut g = Stnu::new();
    let origin = g.add_node(NodeKind::Origin, None);
    for t in 0..n {
        g.add_node(NodeKind::TaskStart, Some(t));
        g.add_node(NodeKind::TaskFinish, Some(t));
    }
    for j in 0..instance.job_count() {
        g.add_node(NodeKind::JobFinish, Some(j));
    }
    let start = |t: TaskId| 1 + 2 * t;
    let finish = |t: TaskId| 2 + 2 * t;
    let job_finish = |j: JobId| 1 + 2 * n + j;

    for (t, task) in instance.tasks() {
        let mode = solution.assignment[t];
        if !task.modes.contains(&mode) {
            return Err(StnuError::UnassignedTask(t));
        }
        let (lower, upper) = u.task_bounds(task, mode);
        if lower <= 0 || lower > upper {
            return Err(StnuError::NonPositiveBound { activation: start(t), contingent: finish(t), lower, upper });
        }
        g.add_contingent(start(t), finish(t), lower, upper);
    }
    for j in 0..instance.job_count() {
        let r = instance.job_tasks(j);
        for t in r.start + 1..r.end {
            g.add_requirement(start(t), finish(t - 1), 0);
        }
    }
    let mut listed = vec![false; n];
    for (m, seq) in solution.machine_sequences.iter().enumerate() {
        for &t in seq {
            if t >= n || listed[t] || solution.assignment[t].machine != m {
                return Err(StnuError::Mismatch(format!("machine {m} sequence lists task {t} inconsistently")));
            }
            listed[t] = true;
        }
        for w in seq.windows(2) {
            g.add_requirement(start(w[1]), finish(w[0]), 0);
        }
    }
    if let Some(t) = listed.iter().position(|&l| !l) {
        return Err(StnuError::UnassignedTask(t));
    }
    for j in 0..instance.job_count() {
        let last = instance.job_tasks(j).end - 1;
        if deadlines.is_hard() {
            g.add_requirement(origin, job_finish(j), deadlines.per_job[j]);
        }
        g.add_requirement(finish(last), job_finish(j), 0);
        g.add_requirement(job_finish(j), finish(last), 0);
    }
    for t in 0..n {
        g.add_requirement(start(t), origin, 0);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{parse_fjs, Alpha, DeadlineMode};
    use crate::solver::{audit, solve, ObjectiveWeights, SolveConfig};

    #[test]
    fn single_task_network() {
        let inst = parse_fjs("1 1\n1 1 1 2").unwrap();
        let u = UncertaintyModel::new(Alpha::new(3, 2).unwrap());
        let d = DeadlineSpec::explicit(DeadlineMode::Hard, vec![5]);
        let sol = solve(&inst, &SolveConfig::new(ObjectiveWeights::default(), d.clone())).unwrap();
        let g = build_stnu(&sol, &inst, &u, &d).unwrap();
        // origin, start, finish, job finish
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.contingents, vec![ContingentLink { activation: 1, contingent: 2, lower: 1, upper: 5 }]);
        assert!(g.requirements.contains(&RequirementEdge { from: 0, to: 3, weight: 5 }));
        g.validate().unwrap();
    }

    #[test]
    fn machine_chain_edge() {
        let inst = parse_fjs("2 1\n1 1 1 2\n1 1 1 3").unwrap();
        let u = UncertaintyModel::new(Alpha::ZERO);
        let d = DeadlineSpec::derive(&inst, &u, DeadlineMode::Soft, 10);
        let sol = solve(&inst, &SolveConfig::new(ObjectiveWeights::default(), d.clone())).unwrap();
        audit(&inst, &sol, None).unwrap();
        let g = build_stnu(&sol, &inst, &u, &d).unwrap();
        let (a, b) = (sol.machine_sequences[0][0], sol.machine_sequences[0][1]);
        assert!(g.requirements.contains(&RequirementEdge { from: 1 + 2 * b, to: 2 + 2 * a, weight: 0 }));
        assert_eq!(g.requirements.len(), expected_requirement_count(&inst, &sol, false));
    }
}
