//! List-scheduling warm starts for the branch-and-bound incumbent.

use super::{time_sequence, Candidate, Prepared, Sequenced};
use crate::instance::{ModeOption, TaskId, Tu};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy)]
enum Rule {
    /// Earliest completion, most remaining work first on ties.
    EarliestCompletion,
    /// Among the earliest-starting candidates, most remaining work.
    MostWorkRemaining,
    /// Among the earliest-starting candidates, least deadline slack.
    LeastSlack,
}

const RANDOM_RUNS: usize = 16;

fn build(p: &Prepared, rule: Rule, mut noise: Option<&mut ChaCha8Rng>) -> Vec<(TaskId, ModeOption)> {
    let mut next: Vec<TaskId> = p.job_first.clone();
    let mut job_ready = vec![0 as Tu; p.jobs];
    let mut mach_ready = vec![0 as Tu; p.machines];
    let mut order = Vec::with_capacity(p.n);
    while order.len() < p.n {
        // (key, task, mode); smaller key wins
        let mut best: Option<((i64, i64, i64), TaskId, ModeOption)> = None;
        let earliest_start = (0..p.jobs)
            .filter(|&j| next[j] <= p.job_last[j])
            .flat_map(|j| {
                let t = next[j];
                p.modes[t].iter().map(move |m| (j, m))
            })
            .map(|(j, m)| job_ready[j].max(mach_ready[m.machine]))
            .min()
            .unwrap_or(0);
        for j in 0..p.jobs {
            let t = next[j];
            if t > p.job_last[j] {
                continue;
            }
            let work = p.min_dur[t] + p.rem_after[t];
            for &m in &p.modes[t] {
                let s = job_ready[j].max(mach_ready[m.machine]);
                let jitter = match noise.as_deref_mut() {
                    Some(rng) => rng.gen_range(0..=2),
                    None => 0,
                };
                let key = match rule {
                    Rule::EarliestCompletion => (s + m.duration + jitter, -work, j as i64),
                    Rule::MostWorkRemaining => {
                        if s > earliest_start + jitter {
                            continue;
                        }
                        (-work, s + m.duration, j as i64)
                    }
                    Rule::LeastSlack => {
                        if s > earliest_start + jitter {
                            continue;
                        }
                        (p.deadline[j] - s - work, s + m.duration, j as i64)
                    }
                };
                if best.as_ref().map_or(true, |b| key < b.0) {
                    best = Some((key, t, m));
                }
            }
        }
        let (_, t, m) = best.expect("some job has work left");
        let j = p.job_of[t];
        let s = job_ready[j].max(mach_ready[m.machine]);
        job_ready[j] = s + m.duration;
        mach_ready[m.machine] = s + m.duration;
        next[j] += 1;
        order.push((t, m));
    }
    order
}

/// Timed schedules from the deterministic rules and a few seeded
/// randomized variants, best first. Variants missing a hard deadline are
/// dropped.
pub(crate) fn warm_starts(p: &Prepared, seed: u64, lps: &mut u64) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::new();
    let mut consider = |order: Vec<(TaskId, ModeOption)>| {
        let seq = Sequenced::from_order(p, &order);
        if let Some(c) = time_sequence(p, seq, None, lps) {
            if !out.iter().any(|o| o.start == c.start && o.seq.mode == c.seq.mode) {
                out.push(c);
            }
        }
    };
    for rule in [Rule::EarliestCompletion, Rule::MostWorkRemaining, Rule::LeastSlack] {
        consider(build(p, rule, None));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..RANDOM_RUNS {
        let rule = [Rule::EarliestCompletion, Rule::MostWorkRemaining, Rule::LeastSlack][k % 3];
        consider(build(p, rule, Some(&mut rng)));
    }
    out.sort_by(|a, b| (a.objective, &a.start).cmp(&(b.objective, &b.start)));
    out
}
