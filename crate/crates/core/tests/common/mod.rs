//! Test-only oracles shared by the integration tests.
#![allow(dead_code)]

use fjsp_stnu::instance::Tu;
use fjsp_stnu::stnu::{NodeKind, Stnu};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Exhaustive controllability game on integer time.
///
/// Node 0 executes at time 0. At every instant nature first finishes any
/// subset of the pending contingent links whose elapsed duration is inside
/// its bounds (links at their upper bound must finish), then the
/// controller, having seen that, executes any subset of its remaining
/// nodes. The controller wins when every node has executed and every
/// requirement holds. `horizon` bounds the controller's times.
pub struct Game<'a> {
    g: &'a Stnu,
    horizon: Tu,
    controllable: Vec<usize>,
    link_of: Vec<Option<usize>>,
    activates: Vec<Vec<usize>>,
    memo: HashMap<(Tu, Vec<i16>), bool>,
}

const UNSET: i16 = -1;

impl<'a> Game<'a> {
    pub fn new(g: &'a Stnu, horizon: Tu) -> Self {
        let link_of = g.contingent_of();
        let controllable = (1..g.node_count()).filter(|&x| link_of[x].is_none()).collect();
        let mut activates = vec![Vec::new(); g.node_count()];
        for (k, c) in g.contingents.iter().enumerate() {
            activates[c.activation].push(k);
        }
        Game { g, horizon, controllable, link_of, activates, memo: HashMap::new() }
    }

    pub fn controller_wins(&mut self) -> bool {
        let mut times = vec![UNSET; self.g.node_count()];
        times[0] = 0;
        self.controller_turn(0, &mut times)
    }

    /// Requirements that are already decided must hold; pending ones must
    /// still be satisfiable by a node executed after `t`.
    fn consistent(&self, times: &[i16], t: Tu) -> bool {
        for e in &self.g.requirements {
            let (a, b) = (times[e.from], times[e.to]);
            match (a != UNSET, b != UNSET) {
                (true, true) => {
                    if (b - a) as Tu > e.weight {
                        return false;
                    }
                }
                (true, false) => {
                    if t + 1 - a as Tu > e.weight {
                        return false;
                    }
                }
                _ => {}
            }
        }
        true
    }

    fn value(&mut self, t: Tu, times: &mut Vec<i16>) -> bool {
        if times.iter().all(|&x| x != UNSET) {
            return true;
        }
        if t > self.horizon {
            return false;
        }
        let key = (t, times.clone());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        // nature
        let mut optional = Vec::new();
        let mut forced = Vec::new();
        for (k, c) in self.g.contingents.iter().enumerate() {
            let a = times[c.activation];
            if a == UNSET || times[c.contingent] != UNSET {
                continue;
            }
            let el = t - a as Tu;
            if el == c.upper {
                forced.push(k);
            } else if el >= c.lower && el < c.upper {
                optional.push(k);
            }
        }
        let mut result = true;
        'nature: for mask in 0u32..(1 << optional.len()) {
            let finishing: Vec<usize> = forced
                .iter()
                .copied()
                .chain(optional.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &k)| k))
                .collect();
            for &k in &finishing {
                times[self.g.contingents[k].contingent] = t as i16;
            }
            let ok = self.controller_turn(t, times);
            for &k in &finishing {
                times[self.g.contingents[k].contingent] = UNSET;
            }
            if !ok {
                result = false;
                break 'nature;
            }
        }
        self.memo.insert(key, result);
        result
    }

    fn controller_turn(&mut self, t: Tu, times: &mut Vec<i16>) -> bool {
        let free: Vec<usize> = self.controllable.iter().copied().filter(|&x| times[x] == UNSET).collect();
        for mask in 0u32..(1 << free.len()) {
            let chosen: Vec<usize> =
                free.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect();
            for &x in &chosen {
                times[x] = t as i16;
            }
            let win = self.consistent(times, t) && self.value(t + 1, times);
            for &x in &chosen {
                times[x] = UNSET;
            }
            if win {
                return true;
            }
        }
        false
    }
}

pub fn oracle_dc(g: &Stnu, horizon: Tu) -> bool {
    Game::new(g, horizon).controller_wins()
}

/// Same network with every weight and bound doubled.
pub fn doubled(g: &Stnu) -> Stnu {
    let mut out = g.clone();
    for e in &mut out.requirements {
        e.weight *= 2;
    }
    for c in &mut out.contingents {
        c.lower *= 2;
        c.upper *= 2;
    }
    out
}

/// Small random network: origin 0, up to `max_links` contingent links with
/// bounds in 1..=`max_bound`, a free node or two, a handful of random
/// requirements, and every node confined to [0, horizon].
pub fn random_network(rng: &mut ChaCha8Rng, max_links: usize, max_bound: Tu, horizon: Tu) -> Stnu {
    let mut g = Stnu::new();
    let o = g.add_node(NodeKind::Origin, None);
    let links = rng.gen_range(1..=max_links);
    for _ in 0..links {
        // sometimes chain off an existing node
        let a = if g.node_count() > 1 && rng.gen_bool(0.3) {
            rng.gen_range(1..g.node_count())
        } else {
            g.add_node(NodeKind::Event, None)
        };
        let c = g.add_node(NodeKind::Event, None);
        let l = rng.gen_range(1..=max_bound);
        let u = rng.gen_range(l..=max_bound);
        g.add_contingent(a, c, l, u);
    }
    for _ in 0..rng.gen_range(0..=2) {
        g.add_node(NodeKind::Event, None);
    }
    let n = g.node_count();
    for x in 1..n {
        g.add_requirement(x, o, 0);
        g.add_requirement(o, x, horizon);
    }
    for _ in 0..rng.gen_range(1..=4) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            g.add_requirement(a, b, rng.gen_range(-4..=8));
        }
    }
    g
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

use fjsp_stnu::instance::{DeadlineSpec, Instance, ModeOption};
use fjsp_stnu::solver::ObjectiveWeights;

/// Random instance with `jobs` jobs of 1..=`max_tasks` tasks on
/// `machines` machines, 1..=2 modes per task, durations 1..=`max_dur`.
pub fn random_instance(r: &mut ChaCha8Rng, jobs: usize, max_tasks: usize, machines: usize, max_dur: Tu) -> Instance {
    let spec = (0..jobs)
        .map(|_| {
            (0..r.gen_range(1..=max_tasks))
                .map(|_| {
                    let k = r.gen_range(1..=2.min(machines));
                    let mut ms: Vec<usize> = (0..machines).collect();
                    for i in 0..k {
                        let j = r.gen_range(i..machines);
                        ms.swap(i, j);
                    }
                    ms[..k].iter().map(|&m| ModeOption { machine: m, duration: r.gen_range(1..=max_dur) }).collect()
                })
                .collect()
        })
        .collect();
    Instance::new("random", machines, spec).unwrap()
}

/// Best objective over every mode choice and every integer start vector
/// in `[0, horizon]`; None when nothing is feasible.
pub fn brute_force_optimum(inst: &Instance, w: ObjectiveWeights, d: &DeadlineSpec, horizon: Tu) -> Option<i64> {
    let n = inst.task_count();
    let tasks: Vec<_> = inst.tasks().map(|(_, t)| t.clone()).collect();
    let mut best: Option<i64> = None;
    let mut modes = vec![0usize; n];
    loop {
        let chosen: Vec<ModeOption> = (0..n).map(|t| tasks[t].modes[modes[t]]).collect();
        let mut start = vec![0 as Tu; n];
        'starts: loop {
            let ok = (0..n).all(|t| {
                let j = inst.job_of(t);
                let first = inst.job_tasks(j).start;
                (t == first || start[t] >= start[t - 1] + chosen[t - 1].duration)
                    && (0..t).all(|s| {
                        chosen[s].machine != chosen[t].machine
                            || start[s] + chosen[s].duration <= start[t]
                            || start[t] + chosen[t].duration <= start[s]
                    })
            });
            if ok {
                let comp: Vec<Tu> = (0..inst.job_count())
                    .map(|j| {
                        let last = inst.job_tasks(j).end - 1;
                        start[last] + chosen[last].duration
                    })
                    .collect();
                let hard_ok = !d.is_hard() || comp.iter().zip(&d.per_job).all(|(c, dl)| c <= dl);
                if hard_ok {
                    let cmax = *comp.iter().max().unwrap();
                    let obj = cmax
                        + comp
                            .iter()
                            .zip(&d.per_job)
                            .map(|(&c, &dl)| w.w_e * (dl - c).max(0) + w.w_t * (c - dl).max(0))
                            .sum::<i64>();
                    best = Some(best.map_or(obj, |b: i64| b.min(obj)));
                }
            }
            for t in 0..n {
                start[t] += 1;
                if start[t] <= horizon {
                    continue 'starts;
                }
                start[t] = 0;
            }
            break;
        }
        let mut t = 0;
        loop {
            if t == n {
                return best;
            }
            modes[t] += 1;
            if modes[t] < tasks[t].modes.len() {
                break;
            }
            modes[t] = 0;
            t += 1;
        }
    }
}

/// OLS through the 2x2 normal equations, solved by Cramer's rule.
pub fn normal_equations(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    let intercept = (sy * sxx - sx * sxy) / det;
    let slope = (n * sxy - sx * sy) / det;
    (slope, intercept)
}

/// Pearson chi-square statistic of `counts` against equal expected mass.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}
