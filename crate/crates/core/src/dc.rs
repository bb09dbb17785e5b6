//! Dynamic controllability by labeled-edge propagation.
//!
//! The network is kept as a closed ordinary distance matrix plus, for every
//! contingent link k = (A, C, l, u), a vector of upper-case ("wait") edges
//! `x -> A` labeled C. Each round closes the ordinary matrix and applies
//! the upper-case, lower-case, cross-case and label-removal reductions,
//! then checks the all-max projection for a negative cycle. The network is
//! controllable iff the process reaches a fixpoint without one. Reaction to
//! an observed finish may be instantaneous.
//!
//! Every derived value keeps a pointer to the facts it came from, so a
//! negative cycle can be unfolded into the original edges that cause it.

use crate::instance::Tu;
use crate::stnu::{NodeId, NodeKind, Stnu};
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

pub const INF: Tu = Tu::MAX / 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WitnessEdge {
    /// Requirement edge by index in `Stnu::requirements`.
    Requirement { index: usize, from: NodeId, to: NodeId, weight: Tu },
    /// `A -> C` with weight `upper` (duration at most upper).
    ContingentMax { link: usize, weight: Tu },
    /// `C -> A` with weight `-lower` (duration at least lower).
    ContingentMin { link: usize, weight: Tu },
    /// Lower-case edge `A -> C : c : lower` (nature may finish early).
    LowerCase { link: usize, weight: Tu },
    /// Upper-case edge `C -> A : C : -upper` (nature may finish late).
    UpperCase { link: usize, weight: Tu },
}

impl WitnessEdge {
    pub fn link(&self) -> Option<usize> {
        match *self {
            WitnessEdge::Requirement { .. } => None,
            WitnessEdge::ContingentMax { link, .. }
            | WitnessEdge::ContingentMin { link, .. }
            | WitnessEdge::LowerCase { link, .. }
            | WitnessEdge::UpperCase { link, .. } => Some(link),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DcStats {
    pub rounds: u32,
    pub tightenings: u64,
    pub elapsed_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcVerdict {
    pub controllable: bool,
    /// Original edges making up the negative cycle; present iff not controllable.
    pub witness: Option<Vec<WitnessEdge>>,
    pub stats: DcStats,
}

impl DcVerdict {
    /// Contingent durations that realize the witness: links that appear
    /// only through their maximum take the upper bound, those that appear
    /// only through their minimum take the lower bound, others stay free.
    pub fn adversarial_bounds(&self, stnu: &Stnu) -> Vec<(Tu, Tu)> {
        let mut uses_max = vec![false; stnu.contingents.len()];
        let mut uses_min = vec![false; stnu.contingents.len()];
        for e in self.witness.iter().flatten() {
            match *e {
                WitnessEdge::ContingentMax { link, .. } | WitnessEdge::UpperCase { link, .. } => uses_max[link] = true,
                WitnessEdge::ContingentMin { link, .. } | WitnessEdge::LowerCase { link, .. } => uses_min[link] = true,
                WitnessEdge::Requirement { .. } => {}
            }
        }
        stnu.contingents
            .iter()
            .enumerate()
            .map(|(k, c)| match (uses_max[k], uses_min[k]) {
                (true, false) => (c.upper, c.upper),
                (false, true) => (c.lower, c.lower),
                _ => (c.lower, c.upper),
            })
            .collect()
    }
}

/// A wait: once `link`'s activation has executed and its finish has not
/// been observed, `node` may not execute before `t(activation) - weight`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wait {
    pub node: NodeId,
    pub link: usize,
    pub weight: Tu,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchableForm {
    pub stnu: Stnu,
    /// Closed ordinary distances, row-major, `INF` where unconstrained.
    pub dist: Vec<Tu>,
    pub waits: Vec<Wait>,
    /// Reference node for windows (the origin when there is one).
    pub reference: NodeId,
    /// Execution window of every node relative to the reference while no
    /// contingent finish has been observed (waits applied); bounds may be
    /// `-INF`/`INF`.
    pub windows: Vec<(Tu, Tu)>,
}

impl DispatchableForm {
    pub fn n(&self) -> usize {
        self.stnu.node_count()
    }

    pub fn d(&self, from: NodeId, to: NodeId) -> Tu {
        self.dist[from * self.n() + to]
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DcError {
    #[error("network is not dynamically controllable")]
    NotControllable(Box<DcVerdict>),
    #[error("invalid network: {0}")]
    Invalid(#[from] crate::stnu::StnuError),
    #[error("window of start node {0} is unbounded")]
    NotDispatchable(NodeId),
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
enum Fact {
    Leaf(WitnessEdge),
    Join(u32, u32),
    Step(u32),
}

struct Engine<'a> {
    g: &'a Stnu,
    n: usize,
    o: Vec<Tu>,
    of: Vec<u32>,
    /// upper-case edges per link, indexed [k][x]
    u: Vec<Vec<Tu>>,
    uf: Vec<Vec<u32>>,
    /// facts for lower-case edges per link
    lc: Vec<u32>,
    facts: Vec<Fact>,
    tightenings: u64,
}

impl<'a> Engine<'a> {
    fn new(g: &'a Stnu) -> Self {
        let n = g.node_count();
        let k = g.contingents.len();
        let mut e = Engine {
            g,
            n,
            o: vec![INF; n * n],
            of: vec![NONE; n * n],
            u: vec![vec![INF; n]; k],
            uf: vec![vec![NONE; n]; k],
            lc: vec![NONE; k],
            facts: Vec::new(),
            tightenings: 0,
        };
        for i in 0..n {
            e.o[i * n + i] = 0;
        }
        for (index, r) in g.requirements.iter().enumerate() {
            let f = e.fact(Fact::Leaf(WitnessEdge::Requirement { index, from: r.from, to: r.to, weight: r.weight }));
            e.set_o(r.from, r.to, r.weight, f);
        }
        for (link, c) in g.contingents.iter().enumerate() {
            let f = e.fact(Fact::Leaf(WitnessEdge::ContingentMax { link, weight: c.upper }));
            e.set_o(c.activation, c.contingent, c.upper, f);
            let f = e.fact(Fact::Leaf(WitnessEdge::ContingentMin { link, weight: -c.lower }));
            e.set_o(c.contingent, c.activation, -c.lower, f);
            e.lc[link] = e.fact(Fact::Leaf(WitnessEdge::LowerCase { link, weight: c.lower }));
            let f = e.fact(Fact::Leaf(WitnessEdge::UpperCase { link, weight: -c.upper }));
            e.u[link][c.contingent] = -c.upper;
            e.uf[link][c.contingent] = f;
        }
        e.tightenings = 0;
        e
    }

    fn fact(&mut self, f: Fact) -> u32 {
        self.facts.push(f);
        (self.facts.len() - 1) as u32
    }

    fn set_o(&mut self, i: usize, j: usize, w: Tu, f: u32) -> bool {
        let idx = i * self.n + j;
        if w < self.o[idx] {
            self.o[idx] = w;
            self.of[idx] = f;
            self.tightenings += 1;
            true
        } else {
            false
        }
    }

    /// Floyd-Warshall on the ordinary edges. Returns a node on a negative
    /// cycle if one appears.
    fn close(&mut self) -> Option<usize> {
        let n = self.n;
        for k in 0..n {
            for i in 0..n {
                let ik = self.o[i * n + k];
                if ik >= INF {
                    continue;
                }
                for j in 0..n {
                    let kj = self.o[k * n + j];
                    if kj >= INF {
                        continue;
                    }
                    let w = ik + kj;
                    if w < self.o[i * n + j] {
                        let f = Fact::Join(self.of[i * n + k], self.of[k * n + j]);
                        let f = self.fact(f);
                        self.set_o(i, j, w, f);
                        if i == j {
                            return Some(i);
                        }
                    }
                }
            }
        }
        None
    }

    /// One pass of the labeled reductions. Returns (changed, negative
    /// self-loop fact if found).
    fn reduce(&mut self) -> (bool, Option<u32>) {
        let n = self.n;
        let mut changed = false;
        let links = self.g.contingents.clone();
        // upper case: x -> y ordinary, y -> A labeled  =>  x -> A labeled
        for k in 0..links.len() {
            for y in 0..n {
                let uy = self.u[k][y];
                if uy >= INF {
                    continue;
                }
                for x in 0..n {
                    let xy = self.o[x * n + y];
                    if xy >= INF || x == y {
                        continue;
                    }
                    let w = xy + uy;
                    if w < self.u[k][x] && w < self.o[x * n + links[k].activation] {
                        let f = Fact::Join(self.of[x * n + y], self.uf[k][y]);
                        self.u[k][x] = w;
                        self.uf[k][x] = self.fact(f);
                        self.tightenings += 1;
                        changed = true;
                    }
                }
            }
        }
        // lower case: A -> C lower-case, C -> x ordinary negative  =>  A -> x
        for (k, c) in links.iter().enumerate() {
            for x in 0..n {
                let cx = self.o[c.contingent * n + x];
                if x == c.contingent || cx >= 0 {
                    continue;
                }
                let w = c.lower + cx;
                if w < self.o[c.activation * n + x] {
                    let f = Fact::Join(self.lc[k], self.of[c.contingent * n + x]);
                    let f = self.fact(f);
                    self.set_o(c.activation, x, w, f);
                    changed = true;
                    if x == c.activation && w < 0 {
                        return (true, Some(f));
                    }
                }
            }
        }
        // cross case: A_k -> C_k lower-case, C_k -> A_j labeled C_j negative
        for (k, c) in links.iter().enumerate() {
            for j in 0..links.len() {
                if j == k {
                    continue;
                }
                let w0 = self.u[j][c.contingent];
                if w0 >= 0 {
                    continue;
                }
                let w = c.lower + w0;
                let aj = links[j].activation;
                if w < self.u[j][c.activation] && w < self.o[c.activation * n + aj] {
                    let f = Fact::Join(self.lc[k], self.uf[j][c.contingent]);
                    self.u[j][c.activation] = w;
                    self.uf[j][c.activation] = self.fact(f);
                    self.tightenings += 1;
                    changed = true;
                }
            }
        }
        // label removal and dominance
        for (k, c) in links.iter().enumerate() {
            for x in 0..n {
                let w = self.u[k][x];
                if w >= INF {
                    continue;
                }
                if x == c.activation && w < 0 {
                    return (changed, Some(self.uf[k][x]));
                }
                if w >= -c.lower {
                    let f = Fact::Step(self.uf[k][x]);
                    let f = self.fact(f);
                    if self.set_o(x, c.activation, w, f) {
                        changed = true;
                    }
                    self.u[k][x] = INF;
                    self.uf[k][x] = NONE;
                } else if self.o[x * n + c.activation] <= w {
                    self.u[k][x] = INF;
                    self.uf[k][x] = NONE;
                }
            }
        }
        (changed, None)
    }

    /// Negative cycle in the projection where every duration is at its
    /// maximum (ordinary edges plus upper-case edges read as ordinary).
    fn all_max_cycle(&mut self) -> Option<u32> {
        let n = self.n;
        let mut d = self.o.clone();
        let mut df = self.of.clone();
        for (k, c) in self.g.contingents.iter().enumerate() {
            for x in 0..n {
                let idx = x * n + c.activation;
                if self.u[k][x] < d[idx] {
                    d[idx] = self.u[k][x];
                    df[idx] = self.uf[k][x];
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                let ik = d[i * n + k];
                if ik >= INF {
                    continue;
                }
                for j in 0..n {
                    let kj = d[k * n + j];
                    if kj >= INF {
                        continue;
                    }
                    if ik + kj < d[i * n + j] {
                        d[i * n + j] = ik + kj;
                        let f = Fact::Join(df[i * n + k], df[k * n + j]);
                        df[i * n + j] = self.fact(f);
                        if i == j && ik + kj < 0 {
                            return Some(df[i * n + j]);
                        }
                    }
                }
            }
        }
        None
    }

    fn unfold(&self, root: u32) -> Vec<WitnessEdge> {
        let mut out = Vec::new();
        let mut seen = vec![false; self.facts.len()];
        let mut stack = vec![root];
        while let Some(f) = stack.pop() {
            if f == NONE || seen[f as usize] {
                continue;
            }
            seen[f as usize] = true;
            match self.facts[f as usize] {
                Fact::Leaf(e) => {
                    if !out.contains(&e) {
                        out.push(e);
                    }
                }
                Fact::Join(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                Fact::Step(a) => stack.push(a),
            }
        }
        out
    }
}

fn run(g: &Stnu) -> (DcVerdict, Option<Engine<'_>>) {
    let t0 = Instant::now();
    let mut e = Engine::new(g);
    let k = g.contingents.len() as u32;
    let cap = (k + 1) * (k + 1) + 2 * g.node_count() as u32 + 4;
    let mut rounds = 0;
    let verdict = |e: &Engine, rounds: u32, witness: Option<Vec<WitnessEdge>>| DcVerdict {
        controllable: witness.is_none(),
        witness,
        stats: DcStats { rounds, tightenings: e.tightenings, elapsed_us: t0.elapsed().as_micros() as u64 },
    };
    loop {
        rounds += 1;
        if let Some(i) = e.close() {
            let w = e.unfold(e.of[i * e.n + i]);
            return (verdict(&e, rounds, Some(w)), None);
        }
        let (changed, bad) = e.reduce();
        if let Some(f) = bad {
            let w = e.unfold(f);
            return (verdict(&e, rounds, Some(w)), None);
        }
        if let Some(f) = e.all_max_cycle() {
            let w = e.unfold(f);
            return (verdict(&e, rounds, Some(w)), None);
        }
        if !changed {
            // the reductions may have added ordinary edges; one more close
            // keeps the matrix closed for dispatch
            if let Some(i) = e.close() {
                let w = e.unfold(e.of[i * e.n + i]);
                return (verdict(&e, rounds, Some(w)), None);
            }
            let v = verdict(&e, rounds, None);
            return (v, Some(e));
        }
        if rounds >= cap {
            // no quiescence within the polynomial cutoff: not controllable
            let last = (e.facts.len() - 1) as u32;
            let w = e.unfold(last);
            return (verdict(&e, rounds, Some(w)), None);
        }
    }
}

pub fn check_dc(stnu: &Stnu) -> DcVerdict {
    run(stnu).0
}

/// Closed distances plus waits for a controllable network, with the
/// no-observation execution window of every node.
pub fn dispatchable_form(stnu: &Stnu) -> Result<DispatchableForm, DcError> {
    stnu.validate()?;
    let (verdict, engine) = run(stnu);
    let Some(e) = engine else {
        return Err(DcError::NotControllable(Box::new(verdict)));
    };
    let n = e.n;
    let mut waits = Vec::new();
    for (k, row) in e.u.iter().enumerate() {
        for (x, &w) in row.iter().enumerate() {
            if w < INF && x != stnu.contingents[k].contingent {
                waits.push(Wait { node: x, link: k, weight: w });
            }
        }
    }
    let reference = stnu.origin().unwrap_or(0);
    let mut windows: Vec<(Tu, Tu)> = (0..n)
        .map(|x| {
            let lo = e.o[x * n + reference];
            let hi = e.o[reference * n + x];
            (if lo >= INF { -INF } else { -lo }, hi)
        })
        .collect();
    // with nothing observed every wait holds in full
    let mut moved = true;
    while moved {
        moved = false;
        for w in &waits {
            let a = stnu.contingents[w.link].activation;
            let lo_a = windows[a].0;
            if lo_a > -INF && lo_a - w.weight > windows[w.node].0 {
                windows[w.node].0 = (lo_a - w.weight).min(windows[w.node].1);
                moved = true;
            }
        }
    }
    Ok(DispatchableForm { stnu: stnu.clone(), dist: e.o, waits, reference, windows })
}

/// Sum over task-start nodes of (latest - earliest) start, read from the
/// dispatchable form with nothing observed.
pub fn total_slack(df: &DispatchableForm) -> Result<Tu, DcError> {
    let mut s = 0;
    for node in &df.stnu.nodes {
        if node.kind != NodeKind::TaskStart {
            continue;
        }
        let (lo, hi) = df.windows[node.id];
        if lo <= -INF || hi >= INF {
            return Err(DcError::NotDispatchable(node.id));
        }
        s += hi - lo;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(lower: Tu, upper: Tu, deadline: Tu) -> Stnu {
        let mut g = Stnu::new();
        let o = g.add_node(NodeKind::Origin, None);
        let a = g.add_node(NodeKind::TaskStart, Some(0));
        let c = g.add_node(NodeKind::TaskFinish, Some(0));
        g.add_contingent(a, c, lower, upper);
        g.add_requirement(a, o, 0);
        g.add_requirement(o, c, deadline);
        g
    }

    #[test]
    fn deadline_at_upper_bound() {
        let v = check_dc(&single(1, 3, 3));
        assert!(v.controllable, "{v:?}");
        let v = check_dc(&single(1, 3, 2));
        assert!(!v.controllable);
        let w = v.witness.unwrap();
        assert!(w.iter().any(|e| matches!(e, WitnessEdge::Requirement { from: 0, to: 2, weight: 2, .. })));
    }

    #[test]
    fn slack_of_single_task() {
        let df = dispatchable_form(&single(2, 5, 8)).unwrap();
        assert_eq!(df.windows[1], (0, 3));
        assert_eq!(total_slack(&df).unwrap(), 3);
        let df = dispatchable_form(&single(2, 5, 5)).unwrap();
        assert_eq!(total_slack(&df).unwrap(), 0);
    }

    #[test]
    fn wait_is_derived() {
        // X must come after C or at least 4 after A, and before A + 6:
        // X waits on C with a fallback at A + 4.
        let mut g = Stnu::new();
        let a = g.add_node(NodeKind::Event, None);
        let c = g.add_node(NodeKind::Event, None);
        let x = g.add_node(NodeKind::Event, None);
        g.add_contingent(a, c, 2, 7);
        g.add_requirement(x, c, 3); // C <= X + 3
        g.add_requirement(a, x, 6);
        let df = dispatchable_form(&g).unwrap();
        assert!(df.waits.iter().any(|w| w.node == x && w.link == 0 && w.weight == -4));
    }
}
