//! Exact retiming of a fixed sequence when earliness is penalized.
//!
//! Only the last task of each job enters the objective, so the LP works on
//! job completions alone. Precedences between last tasks are the longest
//! paths of the job/machine DAG; the constraint matrix is a difference
//! system, so the simplex vertex is integral.

use super::{Prepared, Sequenced};
use crate::instance::{TaskId, Tu};
use microlp::{ComparisonOp, OptimizationDirection, Problem};

/// Returns (objective, start times) of the best timing of `seq`, choosing
/// the componentwise-earliest completions among optimal timings.
pub(crate) fn retime(p: &Prepared, seq: &Sequenced) -> Option<(i64, Vec<Tu>)> {
    let n = p.n;
    let dur: Vec<Tu> = seq.mode.iter().map(|m| m.duration).collect();
    let mut order: Vec<TaskId> = (0..n).collect();
    order.sort_by_key(|&t| (seq.start[t], t));

    let mut succ: Vec<Vec<TaskId>> = vec![Vec::new(); n];
    for t in 0..n {
        if t != p.job_first[p.job_of[t]] {
            succ[t - 1].push(t);
        }
        if let Some(q) = seq.mpred[t] {
            succ[q].push(t);
        }
    }
    let comp_sa: Vec<Tu> = seq.completions(p, &seq.start);
    let horizon: Tu = comp_sa.iter().copied().max().unwrap_or(0) + p.deadline.iter().copied().max().unwrap_or(0).max(0) + 1;

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    // tie-break weight: never worth one unit of the real objective
    let eps = 1.0 / ((p.jobs as f64) * horizon as f64 * 4.0 + 4.0);
    let c: Vec<_> = (0..p.jobs)
        .map(|j| {
            let hi = if p.hard { p.deadline[j] as f64 } else { f64::INFINITY };
            lp.add_var(eps, (comp_sa[j] as f64, hi))
        })
        .collect();
    let m = lp.add_var(1.0, (0.0, f64::INFINITY));
    for j in 0..p.jobs {
        lp.add_constraint(&[(m, 1.0), (c[j], -1.0)], ComparisonOp::Ge, 0.0);
        let d = p.deadline[j] as f64;
        if p.weights.w_e > 0 {
            let e = lp.add_var(p.weights.w_e as f64, (0.0, f64::INFINITY));
            lp.add_constraint(&[(e, 1.0), (c[j], 1.0)], ComparisonOp::Ge, d);
        }
        if p.weights.w_t > 0 {
            let t = lp.add_var(p.weights.w_t as f64, (0.0, f64::INFINITY));
            lp.add_constraint(&[(t, 1.0), (c[j], -1.0)], ComparisonOp::Ge, -d);
        }
    }

    let mut dist: Vec<Tu> = vec![Tu::MIN; n];
    for a in 0..p.jobs {
        let la = p.job_last[a];
        dist.iter_mut().for_each(|v| *v = Tu::MIN);
        dist[la] = 0;
        for &t in order.iter().skip_while(|&&t| t != la) {
            if dist[t] == Tu::MIN {
                continue;
            }
            for &s in &succ[t] {
                dist[s] = dist[s].max(dist[t] + dur[t]);
            }
        }
        for b in 0..p.jobs {
            let lb = p.job_last[b];
            if b != a && dist[lb] != Tu::MIN {
                let gap = dist[lb] - dur[la] + dur[lb];
                lp.add_constraint(&[(c[b], 1.0), (c[a], -1.0)], ComparisonOp::Ge, gap as f64);
            }
        }
    }

    let sol = lp.solve().ok()?.into_solution().ok()?;
    let mut comp = Vec::with_capacity(p.jobs);
    for &v in &c {
        let x = sol.var_value(v);
        let r = x.round();
        if (x - r).abs() > 1e-6 {
            return None;
        }
        comp.push(r as Tu);
    }

    let mut start = vec![0; n];
    let mut fixed = vec![None; n];
    for j in 0..p.jobs {
        fixed[p.job_last[j]] = Some(comp[j] - dur[p.job_last[j]]);
    }
    let mut earliest = vec![0; n];
    for &t in &order {
        let s = match fixed[t] {
            Some(s) if s >= earliest[t] => s,
            Some(_) => return None,
            None => earliest[t],
        };
        start[t] = s;
        for &q in &succ[t] {
            earliest[q] = earliest[q].max(s + dur[t]);
        }
    }
    let real = seq.completions(p, &start);
    if p.hard && (0..p.jobs).any(|j| real[j] > p.deadline[j]) {
        return None;
    }
    Some((p.objective_of(&real), start))
}
