//! Experiment drivers: slack calibration, weight grid, robustness against
//! the uncertainty factor, Pareto extraction and the slack-erosion fit.
//!
//! Every cell gets its own seed derived from the master seed and the
//! cell's grid coordinates, so a cell reproduces on its own and results do
//! not depend on evaluation order or on `jobs`.

use crate::dc::{check_dc, dispatchable_form, total_slack};
use crate::instance::{Alpha, BoundsConvention, DeadlineMode, DeadlineSpec, Instance, Tu, UncertaintyModel};
use crate::rte::ExecutionPolicy;
use crate::sim::{run_monte_carlo_traces, MetricsReport, Sampler, DEFAULT_SAMPLES};
use crate::solver::{solve, ObjectiveWeights, SolveConfig, SolveError, Solution};
use crate::stnu::build_stnu;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CalibrateError {
    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
    #[error("no successful cell to build a front from")]
    EmptyGrid,
    #[error("regression needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("all x values are equal")]
    DegenerateSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub alphas: Vec<Alpha>,
    /// (start, step, end), end inclusive.
    pub delta_range: (Tu, Tu, Tu),
    pub w_e_grid: Vec<i64>,
    pub w_t_grid: Vec<i64>,
    pub n_samples: usize,
    pub seed: u64,
    pub policy: ExecutionPolicy,
    pub convention: BoundsConvention,
    /// Branch-and-bound node budget per solve.
    pub node_limit: u64,
    pub time_limit_secs: f64,
    /// Worker threads across cells.
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let grid = vec![0, 1, 5, 10, 20, 50, 100];
        SweepConfig {
            alphas: ["0.1", "0.2", "0.5", "0.8", "1", "2", "3"].iter().map(|s| s.parse().unwrap()).collect(),
            delta_range: (0, 10, 350),
            w_e_grid: grid.clone(),
            w_t_grid: grid,
            n_samples: DEFAULT_SAMPLES,
            seed: 0,
            policy: ExecutionPolicy::EarliestFeasible,
            convention: BoundsConvention::PerMode,
            node_limit: 200_000,
            time_limit_secs: 60.0,
            jobs: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CalibrateError> {
        let (start, step, end) = self.delta_range;
        let bad = |m: &str| Err(CalibrateError::InvalidConfig(m.into()));
        if step <= 0 {
            return bad("delta step must be positive");
        }
        if start < 0 || end < start {
            return bad("delta range must satisfy 0 <= start <= end");
        }
        if self.alphas.is_empty() || self.w_e_grid.is_empty() || self.w_t_grid.is_empty() {
            return bad("grids must be non-empty");
        }
        if self.w_e_grid.iter().chain(&self.w_t_grid).any(|&w| w < 0) {
            return bad("weights must be non-negative");
        }
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1");
        }
        Ok(())
    }

    pub fn deltas(&self) -> Vec<Tu> {
        let (start, step, end) = self.delta_range;
        (start..=end).step_by(step as usize).collect()
    }

    fn uncertainty(&self, alpha: Alpha) -> UncertaintyModel {
        UncertaintyModel::new(alpha).with_convention(self.convention)
    }

    fn solve_config(&self, weights: ObjectiveWeights, deadlines: DeadlineSpec, seed: u64) -> SolveConfig {
        let mut c = SolveConfig::new(weights, deadlines);
        c.node_limit = self.node_limit;
        c.time_limit = Duration::from_secs_f64(self.time_limit_secs);
        c.seed = seed;
        c
    }
}

/// Seed of the cell at `coords`, independent of evaluation order.
pub fn cell_seed(master: u64, coords: &[u64]) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    for &c in coords {
        rng.set_stream(c.wrapping_add(rng.get_stream().rotate_left(17)));
        rng.set_word_pos(0);
        let _ = rng.next_u64();
    }
    rng.next_u64()
}

/// Maps `f` over `items` on up to `jobs` threads, keeping input order.
fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                out.lock().unwrap()[i] = Some(r);
            });
        }
    });
    out.into_inner().unwrap().into_iter().map(|r| r.expect("every cell ran")).collect()
}

/// Per-job spread `sum (upper - lower)` over the job's tasks, using each
/// task's reference bounds.
pub fn job_spreads(instance: &Instance, u: &UncertaintyModel) -> Vec<Tu> {
    (0..instance.job_count())
        .map(|j| {
            instance.job(j).unwrap_or(&[]).iter().map(|t| {
                let (l, h) = u.reference_bounds(t);
                h - l
            })
            .sum()
        })
        .collect()
}

/// Critical slack: the largest per-job spread.
pub fn delta_star(instance: &Instance, u: &UncertaintyModel) -> Tu {
    job_spreads(instance, u).into_iter().max().unwrap_or(0)
}

/// Spread summed over every task; an upper bound on [`delta_star`] kept
/// as a diagnostic.
pub fn delta_star_all_tasks(instance: &Instance, u: &UncertaintyModel) -> Tu {
    job_spreads(instance, u).into_iter().sum()
}

/// Soft slack recipe: `ceil(nominal makespan) - max_j sum upper`, clamped
/// at zero.
pub fn delta_soft_recipe(instance: &Instance, u: &UncertaintyModel, nominal_makespan: f64) -> Tu {
    let longest_upper = (0..instance.job_count())
        .map(|j| instance.job(j).unwrap_or(&[]).iter().map(|t| u.reference_bounds(t).1).sum::<Tu>())
        .max()
        .unwrap_or(0);
    (nominal_makespan.ceil() as Tu - longest_upper).max(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackCell {
    pub alpha: f64,
    pub delta: Tu,
    pub cp_feasible: bool,
    /// None when no schedule was available to check.
    pub dc: Option<bool>,
    pub makespan: Option<Tu>,
    pub error: Option<String>,
    pub solve_ms: f64,
    pub dc_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackSummary {
    pub alpha: f64,
    pub delta_star: Tu,
    pub delta_star_all_tasks: Tu,
    pub min_delta_cp: Option<Tu>,
    pub min_delta_dc: Option<Tu>,
    /// Both columns switch from false to true at most once.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackProfile {
    pub cells: Vec<SlackCell>,
    pub summary: Vec<SlackSummary>,
}

fn is_step(col: impl Iterator<Item = bool>) -> bool {
    let mut on = false;
    for v in col {
        if on && !v {
            return false;
        }
        on |= v;
    }
    true
}

/// Hard-mode solve and DC check at every (alpha, delta) grid point. The
/// solve minimizes makespan; cell failures are recorded and the sweep
/// goes on.
pub fn sweep_slack(instance: &Instance, cfg: &SweepConfig) -> Result<SlackProfile, CalibrateError> {
    cfg.validate()?;
    let deltas = cfg.deltas();
    let points: Vec<(usize, usize)> =
        (0..cfg.alphas.len()).flat_map(|a| (0..deltas.len()).map(move |d| (a, d))).collect();
    let cells = par_map(&points, cfg.jobs, |&(a, d)| {
        let alpha = cfg.alphas[a];
        let delta = deltas[d];
        let u = cfg.uncertainty(alpha);
        let deadlines = DeadlineSpec::derive(instance, &u, DeadlineMode::Hard, delta);
        let sc = cfg.solve_config(ObjectiveWeights::default(), deadlines.clone(), cell_seed(cfg.seed, &[a as u64, d as u64]));
        let t0 = Instant::now();
        let solved = solve(instance, &sc);
        let solve_ms = t0.elapsed().as_secs_f64() * 1e3;
        let mut cell = SlackCell {
            alpha: alpha.as_f64(),
            delta,
            cp_feasible: false,
            dc: None,
            makespan: None,
            error: None,
            solve_ms,
            dc_ms: 0.0,
        };
        match solved {
            Ok(sol) => {
                cell.cp_feasible = true;
                cell.makespan = Some(sol.makespan);
                match build_stnu(&sol, instance, &u, &deadlines) {
                    Ok(g) => {
                        let t1 = Instant::now();
                        cell.dc = Some(check_dc(&g).controllable);
                        cell.dc_ms = t1.elapsed().as_secs_f64() * 1e3;
                    }
                    Err(e) => cell.error = Some(e.to_string()),
                }
            }
            Err(SolveError::Infeasible(_)) => {}
            Err(e) => cell.error = Some(e.to_string()),
        }
        cell
    });
    let summary = cfg
        .alphas
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let col = &cells[a * deltas.len()..(a + 1) * deltas.len()];
            let u = cfg.uncertainty(alpha);
            SlackSummary {
                alpha: alpha.as_f64(),
                delta_star: delta_star(instance, &u),
                delta_star_all_tasks: delta_star_all_tasks(instance, &u),
                min_delta_cp: col.iter().find(|c| c.cp_feasible).map(|c| c.delta),
                min_delta_dc: col.iter().find(|c| c.dc == Some(true)).map(|c| c.delta),
                monotone: is_step(col.iter().map(|c| c.cp_feasible)) && is_step(col.iter().map(|c| c.dc == Some(true))),
            }
        })
        .collect();
    Ok(SlackProfile { cells, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightCell {
    pub w_e: i64,
    pub w_t: i64,
    pub seed: u64,
    pub nominal_makespan: Option<Tu>,
    pub objective: Option<i64>,
    pub nominal_earliness: Option<Tu>,
    pub nominal_tardiness: Option<Tu>,
    /// Verdict on the network that is executed.
    pub dc: Option<bool>,
    /// Verdict once the soft deadlines are added as arcs.
    pub dc_with_deadlines: Option<bool>,
    /// Total start-time slack of the deadline-armed network, when it is DC.
    pub slack_s: Option<Tu>,
    pub report: Option<MetricsReport>,
    pub error: Option<String>,
    pub solve_ms: f64,
    pub dc_ms: f64,
    pub mc_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightGrid {
    pub alpha: f64,
    pub delta_soft: Tu,
    pub cells: Vec<WeightCell>,
}

impl WeightGrid {
    pub fn cell(&self, w_e: i64, w_t: i64) -> Option<&WeightCell> {
        self.cells.iter().find(|c| c.w_e == w_e && c.w_t == w_t)
    }
}

/// Everything downstream of a solved schedule for one cell: STNU, DC,
/// slack on the deadline-armed network and Monte-Carlo.
fn evaluate_schedule(
    instance: &Instance,
    sol: &Solution,
    u: &UncertaintyModel,
    deadlines: &DeadlineSpec,
    cfg: &SweepConfig,
    seed: u64,
    cell: &mut WeightCell,
) {
    let g = match build_stnu(sol, instance, u, deadlines) {
        Ok(g) => g,
        Err(e) => {
            cell.error = Some(e.to_string());
            return;
        }
    };
    let t0 = Instant::now();
    let df = dispatchable_form(&g);
    cell.dc = Some(df.is_ok());
    let armed = g.with_deadline_arcs(&deadlines.per_job);
    match dispatchable_form(&armed) {
        Ok(adf) => {
            cell.dc_with_deadlines = Some(true);
            cell.slack_s = total_slack(&adf).ok();
        }
        Err(_) => cell.dc_with_deadlines = Some(false),
    }
    cell.dc_ms = t0.elapsed().as_secs_f64() * 1e3;
    let Ok(df) = df else { return };
    let t1 = Instant::now();
    match run_monte_carlo_traces(&df, deadlines, Sampler::uniform(seed), cfg.n_samples, cfg.policy, 1) {
        Ok((mut r, _)) => {
            r.slack_s = cell.slack_s;
            cell.report = Some(r);
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell.mc_ms = t1.elapsed().as_secs_f64() * 1e3;
}

/// Soft-mode solve, STNU, DC and Monte-Carlo for every `(w_e, w_t)`.
/// Cells that are not DC keep their schedule data and carry no report.
pub fn sweep_weights(
    instance: &Instance,
    cfg: &SweepConfig,
    u: &UncertaintyModel,
    delta_soft: Tu,
) -> Result<WeightGrid, CalibrateError> {
    cfg.validate()?;
    if delta_soft < 0 {
        return Err(CalibrateError::InvalidConfig("delta_soft must be non-negative".into()));
    }
    let deadlines = DeadlineSpec::derive(instance, u, DeadlineMode::Soft, delta_soft);
    let points: Vec<(usize, usize)> =
        (0..cfg.w_e_grid.len()).flat_map(|a| (0..cfg.w_t_grid.len()).map(move |b| (a, b))).collect();
    let cells = par_map(&points, cfg.jobs, |&(a, b)| {
        let (w_e, w_t) = (cfg.w_e_grid[a], cfg.w_t_grid[b]);
        let seed = cell_seed(cfg.seed, &[w_e as u64, w_t as u64]);
        let mut cell = WeightCell {
            w_e,
            w_t,
            seed,
            nominal_makespan: None,
            objective: None,
            nominal_earliness: None,
            nominal_tardiness: None,
            dc: None,
            dc_with_deadlines: None,
            slack_s: None,
            report: None,
            error: None,
            solve_ms: 0.0,
            dc_ms: 0.0,
            mc_ms: 0.0,
        };
        let t0 = Instant::now();
        let solved = solve(instance, &cfg.solve_config(ObjectiveWeights::new(w_e, w_t), deadlines.clone(), seed));
        cell.solve_ms = t0.elapsed().as_secs_f64() * 1e3;
        match solved {
            Ok(sol) => {
                cell.nominal_makespan = Some(sol.makespan);
                cell.objective = Some(sol.objective_value);
                cell.nominal_earliness = Some(sol.terms.total_earliness);
                cell.nominal_tardiness = Some(sol.terms.total_tardiness);
                evaluate_schedule(instance, &sol, u, &deadlines, cfg, seed, &mut cell);
            }
            Err(e) => cell.error = Some(e.to_string()),
        }
        cell
    });
    Ok(WeightGrid { alpha: u.alpha.as_f64(), delta_soft, cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub w_e: i64,
    pub w_t: i64,
    pub report: MetricsReport,
}

fn dominates(a: &MetricsReport, b: &MetricsReport) -> bool {
    a.mean_makespan <= b.mean_makespan
        && a.p_tardy <= b.p_tardy
        && (a.mean_makespan < b.mean_makespan || a.p_tardy < b.p_tardy)
}

/// Non-dominated cells under (mean makespan, p_tardy), both minimized,
/// ordered by makespan then p_tardy then weights. Cells with equal
/// metrics are all kept.
pub fn pareto_front(grid: &WeightGrid) -> Result<Vec<ParetoPoint>, CalibrateError> {
    let mut pts: Vec<ParetoPoint> = grid
        .cells
        .iter()
        .filter_map(|c| c.report.clone().map(|report| ParetoPoint { w_e: c.w_e, w_t: c.w_t, report }))
        .collect();
    if pts.is_empty() {
        return Err(CalibrateError::EmptyGrid);
    }
    pts.sort_by(|a, b| {
        a.report
            .mean_makespan
            .total_cmp(&b.report.mean_makespan)
            .then(a.report.p_tardy.total_cmp(&b.report.p_tardy))
            .then((a.w_e, a.w_t).cmp(&(b.w_e, b.w_t)))
    });
    // after the sort a point can only be dominated by an earlier one; the
    // running minimum of p_tardy decides
    let mut front: Vec<ParetoPoint> = Vec::new();
    for p in pts {
        if !front.iter().any(|q| dominates(&q.report, &p.report)) {
            front.push(p);
        }
    }
    Ok(front)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub alpha: f64,
    pub seed: u64,
    pub report: Option<MetricsReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessProfile {
    pub nominal_makespan: Tu,
    pub deadlines: Vec<Tu>,
    pub rows: Vec<RobustnessRow>,
}

/// Solves once in soft mode with deadlines from `base` and `delta_soft`,
/// then for every alpha rebuilds the STNU with that alpha's bounds and
/// runs Monte-Carlo against the same schedule and deadlines.
pub fn robustness_profile(
    instance: &Instance,
    weights: ObjectiveWeights,
    delta_soft: Tu,
    cfg: &SweepConfig,
    base: &UncertaintyModel,
) -> Result<RobustnessProfile, CalibrateError> {
    cfg.validate()?;
    let deadlines = DeadlineSpec::derive(instance, base, DeadlineMode::Soft, delta_soft);
    let sol = solve(instance, &cfg.solve_config(weights, deadlines.clone(), cfg.seed))
        .map_err(|e| CalibrateError::InvalidConfig(format!("baseline solve failed: {e}")))?;
    let idx: Vec<usize> = (0..cfg.alphas.len()).collect();
    let rows = par_map(&idx, cfg.jobs, |&a| {
        let alpha = cfg.alphas[a];
        let u = cfg.uncertainty(alpha);
        let seed = cell_seed(cfg.seed, &[a as u64]);
        let run = || -> Result<MetricsReport, String> {
            let g = build_stnu(&sol, instance, &u, &deadlines).map_err(|e| e.to_string())?;
            let df = dispatchable_form(&g).map_err(|e| e.to_string())?;
            run_monte_carlo_traces(&df, &deadlines, Sampler::uniform(seed), cfg.n_samples, cfg.policy, 1)
                .map(|(r, _)| r)
                .map_err(|e| e.to_string())
        };
        match run() {
            Ok(r) => RobustnessRow { alpha: alpha.as_f64(), seed, report: Some(r), error: None },
            Err(e) => RobustnessRow { alpha: alpha.as_f64(), seed, report: None, error: Some(e) },
        }
    });
    Ok(RobustnessProfile { nominal_makespan: sol.makespan, deadlines: deadlines.per_job, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = intercept + slope * x`. A constant `y`
/// gives slope 0 and R² = 1.
pub fn slack_regression(series: &[(f64, f64)]) -> Result<Regression, CalibrateError> {
    if series.len() < 3 {
        return Err(CalibrateError::TooFewPoints(series.len()));
    }
    let n = series.len() as f64;
    let mx = series.iter().map(|p| p.0).sum::<f64>() / n;
    let my = series.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = series.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = series.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = series.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= f64::EPSILON * n * mx.abs().max(1.0) {
        return Err(CalibrateError::DegenerateSeries);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(Regression { slope, intercept, r_squared })
}
