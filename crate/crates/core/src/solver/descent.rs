//! First-improvement descent on the incumbent: move one task to any
//! position of any of its eligible machines, keep the move if the timed
//! objective drops.

use super::{time_sequence, Candidate, Prepared, Sequenced};
use crate::instance::{ModeOption, TaskId, Tu};

/// Semi-active starts for given modes and machine orders; None on a cycle.
fn semi_active(p: &Prepared, mode: &[ModeOption], orders: &[Vec<TaskId>]) -> Option<Sequenced> {
    let n = p.n;
    let mut mpred = vec![None; n];
    let mut msucc = vec![None; n];
    for ord in orders {
        for w in ord.windows(2) {
            mpred[w[1]] = Some(w[0]);
            msucc[w[0]] = Some(w[1]);
        }
    }
    let mut indeg = vec![0u8; n];
    for t in 0..n {
        indeg[t] = (t != p.job_first[p.job_of[t]]) as u8 + mpred[t].is_some() as u8;
    }
    let mut start = vec![0 as Tu; n];
    let mut stack: Vec<TaskId> = (0..n).filter(|&t| indeg[t] == 0).collect();
    let mut done = 0;
    while let Some(t) = stack.pop() {
        done += 1;
        let end = start[t] + mode[t].duration;
        let job_next = (t != p.job_last[p.job_of[t]]).then_some(t + 1);
        for s in [job_next, msucc[t]].into_iter().flatten() {
            start[s] = start[s].max(end);
            indeg[s] -= 1;
            if indeg[s] == 0 {
                stack.push(s);
            }
        }
    }
    (done == n).then(|| Sequenced { mode: mode.to_vec(), mpred, start })
}

fn orders_of(p: &Prepared, c: &Candidate) -> Vec<Vec<TaskId>> {
    let mut orders = vec![Vec::new(); p.machines];
    for t in 0..p.n {
        orders[c.seq.mode[t].machine].push(t);
    }
    for o in &mut orders {
        o.sort_by_key(|&t| (c.start[t], t));
    }
    orders
}

/// Runs passes over all single-task moves until none improves or
/// `max_evals` sequences have been timed.
pub(crate) fn improve(p: &Prepared, mut cur: Candidate, max_evals: u64, lps: &mut u64) -> Candidate {
    let mut evals = 0u64;
    'pass: loop {
        let mut orders = orders_of(p, &cur);
        for t in 0..p.n {
            let old = cur.seq.mode[t];
            let old_pos = orders[old.machine].iter().position(|&x| x == t).expect("task is sequenced");
            orders[old.machine].remove(old_pos);
            for &m in &p.modes[t] {
                let len = orders[m.machine].len();
                for pos in 0..=len {
                    if m == old && pos == old_pos {
                        continue;
                    }
                    if evals >= max_evals {
                        return cur;
                    }
                    evals += 1;
                    orders[m.machine].insert(pos, t);
                    let mut mode = cur.seq.mode.clone();
                    mode[t] = m;
                    let seq = semi_active(p, &mode, &orders);
                    orders[m.machine].remove(pos);
                    let Some(seq) = seq else { continue };
                    if let Some(c) = time_sequence(p, seq, Some(cur.objective), lps) {
                        if c.objective < cur.objective {
                            cur = c;
                            continue 'pass;
                        }
                    }
                }
            }
            orders[old.machine].insert(old_pos, t);
        }
        return cur;
    }
}
