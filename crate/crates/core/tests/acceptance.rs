//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines reach the console under
//! plain `cargo test`. Correctness criteria (1, 3, 9) fail the process;
//! the empirical ones (2, 4-8) are reported with their measured values.

mod common;

use common::{chi_square_uniform, oracle_dc, rng};
use fjsp_stnu::calibrate::{
    delta_star, pareto_front, robustness_profile, slack_regression, sweep_slack, sweep_weights, SweepConfig,
};
use fjsp_stnu::dc::{check_dc, dispatchable_form};
use fjsp_stnu::instance::{
    parse_fjs, Alpha, DeadlineMode, DeadlineSpec, Instance, ModeOption, Tu, UncertaintyModel,
};
use fjsp_stnu::rte::{execute, replay_static, ExecutionPolicy};
use fjsp_stnu::sim::{run_monte_carlo, run_monte_carlo_traces, sample_durations, Sampler};
use fjsp_stnu::solver::{solve, ObjectiveWeights, SolveConfig};
use fjsp_stnu::stnu::{build_stnu, NodeKind, Stnu};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::time::Instant;

// Pinned tolerances.
const C1_CASES: usize = 5000;
const C1_MAX_SECS: f64 = 60.0;
const C2_RANDOM_INSTANCES: usize = 50;
const C2_KACEM_TOL: Tu = 10;
const C2_MAX_SECS: f64 = 300.0;
const C3_SAMPLES: usize = 500;
const C4_MIN_DROP: f64 = 0.3;
const C4_MAX_MAKESPAN_DEV: f64 = 0.08;
const C4_SEEDS: [u64; 3] = [1, 2, 3];
const C5_MIN_R2: f64 = 0.7;
const C6_SEEDS: [u64; 3] = [1, 2, 3];
const C6_SIGMAS: f64 = 2.0;
const C7_MAX_SECS: f64 = 240.0;
const C7_MAX_DC_SHARE: f64 = 0.05;
const C7_MIN_R2: f64 = 0.9;
const C8_MIN_GAP: f64 = 0.2;
const C9_DRAWS: usize = 100_000;
const C9_SIGNIFICANCE: f64 = 0.01;

const SOFT_DELTA: Tu = 45;
const ROBUSTNESS_DELTA: Tu = 90;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn kacem(k: usize) -> Instance {
    let path = format!("{}/data/kacem{k}.fjs", env!("CARGO_MANIFEST_DIR"));
    parse_fjs(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn alpha(s: &str) -> Alpha {
    s.parse().unwrap()
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).min(8)
}

// ---------------------------------------------------------------------
// 1

/// A member of the small family: node 0 is the origin and precedes every
/// other node; up to 4 more points, up to 3 links with bounds in 1..=4,
/// requirement weights in [-6, 6].
fn family_member(r: &mut rand_chacha::ChaCha8Rng) -> Stnu {
    let n = r.gen_range(2..=5);
    let mut g = Stnu::new();
    g.add_node(NodeKind::Origin, None);
    for _ in 1..n {
        g.add_node(NodeKind::Event, None);
    }
    let k = r.gen_range(1..=3.min(n - 1));
    let mut targets: Vec<usize> = (1..n).collect();
    for i in 0..k {
        let j = r.gen_range(i..targets.len());
        targets.swap(i, j);
        let c = targets[i];
        let mut a = r.gen_range(0..n);
        while a == c {
            a = r.gen_range(0..n);
        }
        let l = r.gen_range(1..=4);
        g.add_contingent(a, c, l, r.gen_range(l..=4));
    }
    for x in 1..n {
        g.add_requirement(x, 0, 0);
    }
    for _ in 0..r.gen_range(0..=5) {
        let a = r.gen_range(0..n);
        let b = r.gen_range(0..n);
        if a != b {
            g.add_requirement(a, b, r.gen_range(-6..=6));
        }
    }
    g
}

fn c1() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(2024);
    let (mut cases, mut agree, mut dc) = (0, 0, 0);
    let mut first_bad = None;
    while cases < C1_CASES {
        let g = family_member(&mut r);
        if g.validate().is_err() {
            continue;
        }
        cases += 1;
        let horizon = g.requirements.iter().map(|e| e.weight.abs()).sum::<Tu>()
            + g.contingents.iter().map(|c| c.upper).sum::<Tu>()
            + 1;
        let expected = oracle_dc(&g, horizon);
        let got = check_dc(&g).controllable;
        dc += expected as usize;
        if expected == got {
            agree += 1;
        } else if first_bad.is_none() {
            first_bad = Some(format!("{g:?}"));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let mut detail = format!("{agree}/{cases} agree ({dc} controllable), {secs:.1}s (limit {C1_MAX_SECS}s)");
    if let Some(b) = first_bad {
        detail.push_str(&format!("; first mismatch {b}"));
    }
    outcome(agree == cases && secs < C1_MAX_SECS, detail)
}

// ---------------------------------------------------------------------
// 2

/// One or two jobs on disjoint machine pools, 1..=4 tasks each, 1..=2
/// modes per task.
fn chain_instance(r: &mut rand_chacha::ChaCha8Rng, jobs: usize) -> Instance {
    let pool = 2;
    let spec = (0..jobs)
        .map(|j| {
            (0..r.gen_range(1..=4))
                .map(|_| {
                    let k = r.gen_range(1..=pool);
                    (0..k).map(|i| ModeOption { machine: j * pool + i, duration: r.gen_range(1..=8) }).collect()
                })
                .collect()
        })
        .collect();
    Instance::new("chain", jobs * pool, spec).unwrap()
}

fn c2() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(77);
    let mut exact = 0;
    let mut below_fails = 0;
    let mut misses = Vec::new();
    for i in 0..C2_RANDOM_INSTANCES {
        let inst = chain_instance(&mut r, 1 + i % 2);
        let a = [alpha("0.2"), alpha("0.5"), alpha("1")][i % 3];
        let u = UncertaintyModel::new(a);
        let ds = delta_star(&inst, &u);
        let cfg = SweepConfig { alphas: vec![a], delta_range: (0, 1, ds + 10), ..Default::default() };
        let prof = sweep_slack(&inst, &cfg).unwrap();
        let s = &prof.summary[0];
        if s.min_delta_dc == Some(ds) {
            exact += 1;
        } else {
            misses.push(format!("#{i}: min_dc {:?} vs {ds}", s.min_delta_dc));
        }
        let below = ds == 0 || prof.cells.iter().find(|c| c.delta == ds - 1).is_some_and(|c| c.dc != Some(true));
        below_fails += below as usize;
    }
    let mut parts = vec![format!(
        "random: {exact}/{C2_RANDOM_INSTANCES} exact, {below_fails}/{C2_RANDOM_INSTANCES} not DC at delta*-1"
    )];
    if !misses.is_empty() {
        parts.push(format!("misses [{}]", misses.join(", ")));
    }
    let mut kacem_ok = true;
    for k in 1..=4 {
        let inst = kacem(k);
        for a in ["0.5", "1"] {
            let cfg = SweepConfig { alphas: vec![alpha(a)], node_limit: 20_000, jobs: workers(), ..Default::default() };
            let prof = sweep_slack(&inst, &cfg).unwrap();
            let s = &prof.summary[0];
            let ok = s.min_delta_dc.is_some_and(|d| (d - s.delta_star).abs() <= C2_KACEM_TOL);
            kacem_ok &= ok;
            parts.push(format!(
                "K{k} a={a}: delta*={} cp@{:?} dc@{:?} step={}",
                s.delta_star,
                s.min_delta_cp,
                s.min_delta_dc,
                if s.monotone { "ok" } else { "non-monotone" }
            ));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    parts.push(format!("{secs:.0}s (limit {C2_MAX_SECS}s)"));
    outcome(
        exact == C2_RANDOM_INSTANCES && below_fails == C2_RANDOM_INSTANCES && kacem_ok && secs < C2_MAX_SECS,
        parts.join("; "),
    )
}

// ---------------------------------------------------------------------
// 3

fn all_vectors(bounds: &[(Tu, Tu)]) -> Vec<Vec<Tu>> {
    let mut out = vec![Vec::new()];
    for &(l, u) in bounds {
        out = out
            .into_iter()
            .flat_map(|v: Vec<Tu>| {
                (l..=u).map(move |d| {
                    let mut v = v.clone();
                    v.push(d);
                    v
                })
            })
            .collect();
    }
    out
}

/// Smallest delta in `delta_star + 10 k` whose hard-mode schedule is DC.
fn first_dc_delta(inst: &Instance, u: &UncertaintyModel, node_limit: u64) -> Option<(Tu, DeadlineSpec, fjsp_stnu::solver::Solution)> {
    let ds = delta_star(inst, u);
    (0..=60).map(|k| ds + 10 * k).find_map(|delta| {
        let d = DeadlineSpec::derive(inst, u, DeadlineMode::Hard, delta);
        let mut c = SolveConfig::new(ObjectiveWeights::default(), d.clone());
        c.node_limit = node_limit;
        let sol = solve(inst, &c).ok()?;
        let g = build_stnu(&sol, inst, u, &d).ok()?;
        check_dc(&g).controllable.then_some((delta, d, sol))
    })
}

fn c3() -> Outcome {
    let mut r = rng(31);
    let (mut networks, mut runs, mut bad) = (0, 0, 0);
    while networks < 400 {
        let g = family_member(&mut r);
        if g.validate().is_err() || !check_dc(&g).controllable {
            continue;
        }
        networks += 1;
        let df = dispatchable_form(&g).unwrap();
        let bounds: Vec<(Tu, Tu)> = g.contingents.iter().map(|c| (c.lower, c.upper)).collect();
        for v in all_vectors(&bounds) {
            for p in [ExecutionPolicy::EarliestFeasible, ExecutionPolicy::LatestSafe] {
                runs += 1;
                match execute(&df, &v, p) {
                    Ok(t) if t.violations.is_empty() => {}
                    _ => bad += 1,
                }
            }
        }
    }
    let mut parts = vec![format!("toy: {runs} exhaustive runs on {networks} DC networks, {bad} violating")];
    let mut pass = bad == 0;
    for k in 1..=4 {
        let inst = kacem(k);
        let u = UncertaintyModel::new(alpha("0.6"));
        let Some((delta, d, sol)) = first_dc_delta(&inst, &u, 20_000) else {
            parts.push(format!("K{k}: no DC schedule found"));
            continue;
        };
        let df = dispatchable_form(&build_stnu(&sol, &inst, &u, &d).unwrap()).unwrap();
        for p in [ExecutionPolicy::EarliestFeasible, ExecutionPolicy::LatestSafe] {
            match run_monte_carlo(&df, &d, Sampler::uniform(k as u64), C3_SAMPLES, p) {
                Ok(rep) => {
                    pass &= rep.violations == 0 && rep.p_tardy == 0.0;
                    parts.push(format!(
                        "K{k} hard delta={delta} {p:?}: violations {} p_tardy {}",
                        rep.violations, rep.p_tardy
                    ));
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("K{k} {p:?}: {e}"));
                }
            }
        }
    }
    outcome(pass, parts.join("; "))
}

// ---------------------------------------------------------------------
// 4, 5

struct Grids {
    grids: Vec<fjsp_stnu::calibrate::WeightGrid>,
    secs: f64,
}

fn weight_grids() -> Grids {
    let t0 = Instant::now();
    let inst = kacem(3);
    let u = UncertaintyModel::new(alpha("0.6"));
    let grids = C4_SEEDS
        .iter()
        .map(|&seed| {
            let cfg = SweepConfig { seed, jobs: workers(), ..Default::default() };
            sweep_weights(&inst, &cfg, &u, SOFT_DELTA).unwrap()
        })
        .collect();
    Grids { grids, secs: t0.elapsed().as_secs_f64() }
}

fn seed_mean(g: &Grids, f: impl Fn(&fjsp_stnu::calibrate::WeightGrid) -> Option<f64>) -> Option<f64> {
    let v: Vec<f64> = g.grids.iter().filter_map(f).collect();
    (v.len() == g.grids.len()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn c4(g: &Grids) -> Outcome {
    let p = |we, wt| seed_mean(g, |grid| grid.cell(we, wt)?.report.as_ref().map(|r| r.p_tardy));
    let (p00, p520) = (p(0, 0), p(5, 20));
    let cells = &g.grids[0].cells;
    let makespans: Vec<f64> = cells
        .iter()
        .filter_map(|c| seed_mean(g, |grid| grid.cell(c.w_e, c.w_t)?.nominal_makespan.map(|m| m as f64)))
        .collect();
    let mean = makespans.iter().sum::<f64>() / makespans.len().max(1) as f64;
    let dev = makespans.iter().map(|m| (m - mean).abs() / mean).fold(0.0, f64::max);
    let (lo, hi) = makespans.iter().fold((f64::MAX, 0.0f64), |(a, b), &m| (a.min(m), b.max(m)));
    let drop = match (p00, p520) {
        (Some(a), Some(b)) => a - b,
        _ => f64::NAN,
    };
    let front = pareto_front(&g.grids[0]).map(|f| f.iter().map(|p| format!("({},{})", p.w_e, p.w_t)).collect::<Vec<_>>());
    let detail = format!(
        "p_tardy(0,0)={p00:?} p_tardy(5,20)={p520:?} drop={drop:.3} (need >= {C4_MIN_DROP}); nominal makespan over {} cells mean {mean:.1} range [{lo}, {hi}] max dev {:.1}% (limit {:.0}%); front seed1 {:?}; {:.0}s",
        makespans.len(),
        100.0 * dev,
        100.0 * C4_MAX_MAKESPAN_DEV,
        front.unwrap_or_default(),
        g.secs
    );
    outcome(drop >= C4_MIN_DROP && dev <= C4_MAX_MAKESPAN_DEV && makespans.len() == cells.len(), detail)
}

fn c5(g: &Grids) -> Outcome {
    // every (seed, w_e) cell with a defined S is a point; cells whose
    // deadline-armed network is not DC have no slack and are counted
    let w_es = [0, 1, 5, 10, 20, 50];
    let mut pts = Vec::new();
    let mut missing = 0;
    let mut shown = Vec::new();
    for &we in &w_es {
        let vals: Vec<f64> =
            g.grids.iter().filter_map(|grid| grid.cell(we, 20)?.slack_s.map(|s| s as f64)).collect();
        missing += g.grids.len() - vals.len();
        pts.extend(vals.iter().map(|&v| (we as f64, v)));
        let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
        shown.push(if vals.is_empty() { format!("{we}:-") } else { format!("{we}:{mean:.1}/{}", vals.len()) });
    }
    let series = format!("w_t=20 mean S/defined seeds [{}], {missing} undefined", shown.join(" "));
    match slack_regression(&pts) {
        Ok(fit) => outcome(
            fit.slope < 0.0 && fit.r_squared >= C5_MIN_R2 && missing == 0,
            format!(
                "S = {:.2} {:+.3} w_e, R2 {:.3} (need slope < 0, R2 >= {C5_MIN_R2}, S defined everywhere); {series}",
                fit.intercept, fit.slope, fit.r_squared
            ),
        ),
        Err(e) => outcome(false, format!("{e}; {series}")),
    }
}

// ---------------------------------------------------------------------
// 6

fn c6() -> Outcome {
    let inst = kacem(3);
    let base = UncertaintyModel::new(alpha("0.6"));
    let profiles: Vec<_> = C6_SEEDS
        .iter()
        .map(|&seed| {
            let cfg = SweepConfig { seed, jobs: workers(), ..Default::default() };
            robustness_profile(&inst, ObjectiveWeights::new(5, 20), ROBUSTNESS_DELTA, &cfg, &base).unwrap()
        })
        .collect();
    let alphas: Vec<f64> = profiles[0].rows.iter().map(|r| r.alpha).collect();
    let k = C6_SEEDS.len() as f64;
    let mut rows = Vec::new();
    for i in 0..alphas.len() {
        let reps: Vec<_> = profiles.iter().filter_map(|p| p.rows[i].report.clone()).collect();
        if reps.len() != profiles.len() {
            return outcome(false, format!("alpha {} failed: {:?}", alphas[i], profiles[0].rows[i].error));
        }
        let n = reps[0].n_samples as f64 * k;
        let mean = reps.iter().map(|r| r.mean_makespan).sum::<f64>() / k;
        let sd = reps.iter().map(|r| r.makespan_stddev).sum::<f64>() / k;
        let p_early = reps.iter().map(|r| r.p_early).sum::<f64>() / k;
        let gap = reps.iter().map(|r| r.p95_makespan as f64 - r.mean_makespan).sum::<f64>() / k;
        rows.push((alphas[i], mean, sd / n.sqrt(), p_early, (p_early * (1.0 - p_early) / n).sqrt(), gap));
    }
    let mut ok = true;
    for w in rows.windows(2) {
        let (a, b) = (w[0], w[1]);
        let se = (a.2 * a.2 + b.2 * b.2).sqrt();
        ok &= b.1 >= a.1 - C6_SIGMAS * se;
        ok &= b.3 <= a.3 + C6_SIGMAS * (a.4 * a.4 + b.4 * b.4).sqrt() + 1e-12;
        // p95 moves in whole units; allow its rounding plus the mean's error
        ok &= b.5 >= a.5 - 1.0 - C6_SIGMAS * se;
    }
    ok &= rows.last().unwrap().5 > rows[0].5;
    let shown: Vec<String> =
        rows.iter().map(|r| format!("a={}: mean {:.2} p_early {:.3} gap {:.2}", r.0, r.1, r.3, r.5)).collect();
    outcome(ok, format!("{}; tolerance {C6_SIGMAS} SE", shown.join(" | ")))
}

// ---------------------------------------------------------------------
// 7

fn c7() -> Outcome {
    let u = UncertaintyModel::new(alpha("0.6"));
    let mut sizes = Vec::new();
    let mut cp = Vec::new();
    let mut rte = Vec::new();
    let mut parts = Vec::new();
    let mut k4 = (f64::NAN, f64::NAN);
    for k in 1..=4 {
        let inst = kacem(k);
        let ds = delta_star(&inst, &u);
        let t_total = Instant::now();
        let mut delta = ds;
        let mut note = "";
        let (sol, d, t_cp, g, t_dc, dc) = loop {
            let d = DeadlineSpec::derive(&inst, &u, DeadlineMode::Hard, delta);
            let t0 = Instant::now();
            let sol = solve(&inst, &SolveConfig::new(ObjectiveWeights::default(), d.clone()));
            let t_cp = t0.elapsed().as_secs_f64();
            if let Ok(sol) = sol {
                let g = build_stnu(&sol, &inst, &u, &d).unwrap();
                let t1 = Instant::now();
                let dc = check_dc(&g).controllable;
                let t_dc = t1.elapsed().as_secs_f64();
                if dc || delta > ds + 600 {
                    break (sol, d, t_cp, g, t_dc, dc);
                }
            }
            delta += 10;
            note = " (not DC at delta*, raised)";
        };
        if !dc {
            parts.push(format!("K{k}: no DC schedule"));
            continue;
        }
        let t2 = Instant::now();
        let df = dispatchable_form(&g).unwrap();
        let (rep, _) =
            run_monte_carlo_traces(&df, &d, Sampler::uniform(1), 500, ExecutionPolicy::EarliestFeasible, 1).unwrap();
        let t_rte = t2.elapsed().as_secs_f64();
        let total = t_total.elapsed().as_secs_f64();
        let _ = (rep, sol);
        sizes.push(inst.task_count() as f64);
        cp.push(t_cp);
        rte.push(t_rte);
        parts.push(format!(
            "K{k} n={} delta={delta}{note}: cp {t_cp:.2}s dc {:.4}s rte {t_rte:.2}s total {total:.2}s",
            inst.task_count(),
            t_dc
        ));
        if k == 4 {
            k4 = (total, t_dc / total);
        }
    }
    let fit = |ys: &[f64]| {
        let pts: Vec<(f64, f64)> = sizes.iter().copied().zip(ys.iter().copied()).collect();
        slack_regression(&pts).map(|f| f.r_squared).unwrap_or(f64::NAN)
    };
    let (r_cp, r_rte) = (fit(&cp), fit(&rte));
    parts.push(format!(
        "K4 total {:.1}s (limit {C7_MAX_SECS}s), DC share {:.3}% (limit {:.0}%), R2 cp {r_cp:.3} rte {r_rte:.3} (need > {C7_MIN_R2})",
        k4.0,
        100.0 * k4.1,
        100.0 * C7_MAX_DC_SHARE
    ));
    outcome(
        k4.0 < C7_MAX_SECS && k4.1 < C7_MAX_DC_SHARE && r_cp > C7_MIN_R2 && r_rte > C7_MIN_R2,
        parts.join("; "),
    )
}

// ---------------------------------------------------------------------
// 8

fn c8() -> Outcome {
    let inst = kacem(3);
    let mut ok = true;
    let mut parts = Vec::new();
    for a in ["0.5", "0.6"] {
        let u = UncertaintyModel::new(alpha(a));
        let d = DeadlineSpec::derive(&inst, &u, DeadlineMode::Soft, SOFT_DELTA);
        let sol = solve(&inst, &SolveConfig::new(ObjectiveWeights::new(5, 20), d.clone())).unwrap();
        let g = build_stnu(&sol, &inst, &u, &d).unwrap();
        let df = dispatchable_form(&g).unwrap();
        let (mut rte, mut stat) = (0usize, 0usize);
        let samples = sample_durations(&g, Sampler::uniform(8), 500);
        for v in &samples {
            let mut t = execute(&df, v, ExecutionPolicy::EarliestFeasible).unwrap();
            t.apply_deadlines(&d.per_job);
            rte += t.any_tardy() as usize;
            let mut s = replay_static(&inst, &sol, &u, v).unwrap();
            s.apply_deadlines(&d.per_job);
            stat += s.any_tardy() as usize;
        }
        let n = samples.len() as f64;
        let gap = (stat as f64 - rte as f64) / n;
        ok &= gap >= C8_MIN_GAP;
        parts.push(format!(
            "a={a}: static miss {:.3} rte miss {:.3} gap {gap:.3}",
            stat as f64 / n,
            rte as f64 / n
        ));
    }
    parts.push(format!("need gap >= {C8_MIN_GAP}; (5,20) schedule, soft delta {SOFT_DELTA}"));
    outcome(ok, parts.join("; "))
}

// ---------------------------------------------------------------------
// 9

fn c9() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (l, u)) in [(2, 5), (1, 10), (5, 20), (1, 2), (13, 19)].into_iter().enumerate() {
        let mut g = Stnu::new();
        let a = g.add_node(NodeKind::Event, None);
        let c = g.add_node(NodeKind::Event, None);
        g.add_contingent(a, c, l, u);
        let mut counts = vec![0u64; (u - l + 1) as usize];
        for v in sample_durations(&g, Sampler::uniform(1000 + i as u64), C9_DRAWS) {
            counts[(v[0] - l) as usize] += 1;
        }
        let stat = chi_square_uniform(&counts);
        let p = 1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat);
        ok &= p > C9_SIGNIFICANCE;
        parts.push(format!("[{l},{u}] chi2 {stat:.2} p {p:.3}"));
    }
    outcome(ok, format!("{} (pass if p > {C9_SIGNIFICANCE}, {C9_DRAWS} draws each)", parts.join(", ")))
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    // libtest-style flags passed by `cargo test` are ignored; a bare
    // number selects one criterion
    let only: Option<usize> = args.iter().skip(1).find_map(|a| a.parse().ok());
    let want = |k: usize| only.map_or(true, |o| o == k);
    let mut hard_failures = Vec::new();
    let mut run = |k: usize, name: &str, hard: bool, f: &mut dyn FnMut() -> Outcome| {
        if !want(k) {
            return;
        }
        let t0 = Instant::now();
        let o = f();
        println!(
            "criterion {k} {name}: {} [{:.1}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            o.detail
        );
        if hard && !o.pass {
            hard_failures.push(k);
        }
    };
    run(1, "dc oracle equivalence", true, &mut c1);
    run(2, "critical slack tightness", false, &mut c2);
    run(3, "zero violations", true, &mut c3);
    let mut grids = None;
    if want(4) || want(5) {
        grids = Some(weight_grids());
    }
    run(4, "soft weight trend", false, &mut || c4(grids.as_ref().unwrap()));
    run(5, "slack erosion", false, &mut || c5(grids.as_ref().unwrap()));
    run(6, "robustness profile shape", false, &mut c6);
    run(7, "scalability envelope", false, &mut c7);
    run(8, "static replay gap", false, &mut c8);
    run(9, "sampler law", true, &mut c9);
    if !hard_failures.is_empty() {
        eprintln!("correctness criteria failed: {hard_failures:?}");
        std::process::exit(1);
    }
}
