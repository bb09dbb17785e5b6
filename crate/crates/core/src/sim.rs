//! Duration sampling and Monte-Carlo aggregation.
//!
//! Sample `i` of a run draws from its own ChaCha8 stream (`seed`, stream
//! `i`), so a sample's durations do not depend on how many samples are
//! drawn or in which order, and parallel runs reproduce serial ones bit
//! for bit.

use crate::dc::{total_slack, DispatchableForm};
use crate::instance::{DeadlineSpec, Tu};
use crate::rte::{execute, ExecutionError, ExecutionPolicy, ExecutionTrace};
use crate::stnu::Stnu;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SAMPLES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    #[default]
    DiscreteUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sampler {
    pub kind: SamplerKind,
    pub seed: u64,
}

impl Sampler {
    pub fn uniform(seed: u64) -> Self {
        Sampler { kind: SamplerKind::DiscreteUniform, seed }
    }

    /// Durations of sample `index`, one per contingent link.
    pub fn sample(&self, bounds: &[(Tu, Tu)], index: usize) -> Vec<Tu> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        match self.kind {
            SamplerKind::DiscreteUniform => bounds.iter().map(|&(l, u)| rng.gen_range(l..=u)).collect(),
        }
    }
}

fn link_bounds(stnu: &Stnu) -> Vec<(Tu, Tu)> {
    stnu.contingents.iter().map(|c| (c.lower, c.upper)).collect()
}

/// `n` duration vectors, each component uniform on its link's integer
/// range, inclusive.
pub fn sample_durations(stnu: &Stnu, sampler: Sampler, n: usize) -> Vec<Vec<Tu>> {
    let bounds = link_bounds(stnu);
    (0..n).map(|i| sampler.sample(&bounds, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_samples: usize,
    pub seed: u64,
    pub policy: ExecutionPolicy,
    pub mean_makespan: f64,
    /// Nearest-rank 95th percentile.
    pub p95_makespan: Tu,
    pub makespan_stddev: f64,
    /// Runs where at least one job finished after its deadline.
    pub p_tardy: f64,
    /// Runs where every job finished strictly before its deadline.
    pub p_early: f64,
    /// Runs with no tardy job and at least one job exactly on time.
    pub p_boundary: f64,
    /// Per job, fraction of runs in which that job was tardy.
    pub per_job_tardy: Vec<f64>,
    /// Per job, fraction of runs in which that job finished strictly early.
    pub per_job_early: Vec<f64>,
    pub mean_total_earliness: f64,
    pub mean_total_tardiness: f64,
    /// Total slack of the dispatchable form, when every start is bounded.
    pub slack_s: Option<Tu>,
    /// Requirement edges broken, summed over runs.
    pub violations: usize,
}

impl MetricsReport {
    /// Aggregates traces already scored against `deadlines`. Integer
    /// accumulators keep the result independent of trace order.
    pub fn from_traces(traces: &[ExecutionTrace], deadlines: &[Tu], seed: u64, policy: ExecutionPolicy) -> Self {
        let n = traces.len();
        let jobs = deadlines.len();
        let mut makespans: Vec<Tu> = traces.iter().map(|t| t.realized_makespan).collect();
        makespans.sort_unstable();
        let (mut sum, mut sum_sq) = (0i128, 0i128);
        for &m in &makespans {
            sum += m as i128;
            sum_sq += (m as i128) * (m as i128);
        }
        let (mut tardy, mut early, mut boundary) = (0usize, 0usize, 0usize);
        let mut job_tardy = vec![0usize; jobs];
        let mut job_early = vec![0usize; jobs];
        let (mut earliness, mut tardiness) = (0i128, 0i128);
        let mut violations = 0;
        for t in traces {
            let mut any_late = false;
            let mut all_early = true;
            for (j, &d) in deadlines.iter().enumerate() {
                let c = t.job_completion[j];
                if c > d {
                    any_late = true;
                    job_tardy[j] += 1;
                }
                if c < d {
                    job_early[j] += 1;
                } else {
                    all_early = false;
                }
                earliness += (d - c).max(0) as i128;
                tardiness += (c - d).max(0) as i128;
            }
            match (any_late, all_early) {
                (true, _) => tardy += 1,
                (false, true) => early += 1,
                (false, false) => boundary += 1,
            }
            violations += t.violations.len();
        }
        let nf = n.max(1) as f64;
        let mean = sum as f64 / nf;
        let var = if n > 1 { (sum_sq as f64 - (sum as f64) * mean) / (n as f64 - 1.0) } else { 0.0 };
        let p95 = if n == 0 { 0 } else { makespans[((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1] };
        MetricsReport {
            n_samples: n,
            seed,
            policy,
            mean_makespan: mean,
            p95_makespan: p95,
            makespan_stddev: var.max(0.0).sqrt(),
            p_tardy: tardy as f64 / nf,
            p_early: early as f64 / nf,
            p_boundary: boundary as f64 / nf,
            per_job_tardy: job_tardy.iter().map(|&k| k as f64 / nf).collect(),
            per_job_early: job_early.iter().map(|&k| k as f64 / nf).collect(),
            mean_total_earliness: earliness as f64 / nf,
            mean_total_tardiness: tardiness as f64 / nf,
            slack_s: None,
            violations,
        }
    }
}

/// Executes `n` sampled realizations and aggregates them.
pub fn run_monte_carlo(
    df: &DispatchableForm,
    deadlines: &DeadlineSpec,
    sampler: Sampler,
    n: usize,
    policy: ExecutionPolicy,
) -> Result<MetricsReport, ExecutionError> {
    run_monte_carlo_traces(df, deadlines, sampler, n, policy, 1).map(|(r, _)| r)
}

/// As [`run_monte_carlo`], also returning the traces, spread over `jobs`
/// threads. Output does not depend on `jobs`.
pub fn run_monte_carlo_traces(
    df: &DispatchableForm,
    deadlines: &DeadlineSpec,
    sampler: Sampler,
    n: usize,
    policy: ExecutionPolicy,
    jobs: usize,
) -> Result<(MetricsReport, Vec<ExecutionTrace>), ExecutionError> {
    let bounds = link_bounds(&df.stnu);
    let one = |i: usize| -> Result<ExecutionTrace, ExecutionError> {
        let mut t = execute(df, &sampler.sample(&bounds, i), policy)?;
        t.apply_deadlines(&deadlines.per_job);
        Ok(t)
    };
    let jobs = jobs.clamp(1, n.max(1));
    let traces: Vec<ExecutionTrace> = if jobs == 1 {
        (0..n).map(one).collect::<Result<_, _>>()?
    } else {
        let chunk = n.div_ceil(jobs);
        let parts: Vec<Result<Vec<ExecutionTrace>, ExecutionError>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..jobs)
                .map(|w| {
                    let one = &one;
                    s.spawn(move || (w * chunk..((w + 1) * chunk).min(n)).map(one).collect())
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut all = Vec::with_capacity(n);
        for p in parts {
            all.extend(p?);
        }
        all
    };
    let mut report = MetricsReport::from_traces(&traces, &deadlines.per_job, sampler.seed, policy);
    report.slack_s = total_slack(df).ok();
    Ok((report, traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stnu::NodeKind;

    #[test]
    fn degenerate_range_is_constant() {
        let mut g = Stnu::new();
        let a = g.add_node(NodeKind::Event, None);
        let c = g.add_node(NodeKind::Event, None);
        g.add_contingent(a, c, 3, 3);
        assert!(sample_durations(&g, Sampler::uniform(1), 50).iter().all(|v| v == &[3]));
    }

    #[test]
    fn samples_are_prefix_stable() {
        let mut g = Stnu::new();
        let a = g.add_node(NodeKind::Event, None);
        let c = g.add_node(NodeKind::Event, None);
        g.add_contingent(a, c, 2, 9);
        let short = sample_durations(&g, Sampler::uniform(4), 10);
        let long = sample_durations(&g, Sampler::uniform(4), 100);
        assert_eq!(short[..], long[..10]);
    }
}
