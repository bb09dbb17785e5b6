use crate::run::{io, Run};
use crate::settings::{Flags, Settings};
use crate::CliError;
use fjsp_stnu::calibrate::{self, delta_soft_recipe, delta_star, WeightCell};
use fjsp_stnu::dc::{check_dc as dc_check, dispatchable_form, total_slack, DcError};
use fjsp_stnu::instance::{parse_fjs, DeadlineMode, DeadlineSpec, Instance, Tu};
use fjsp_stnu::rte::ExecutionTrace;
use fjsp_stnu::sim::{run_monte_carlo_traces, Sampler};
use fjsp_stnu::solver::{solve as solve_fjsp, ObjectiveWeights, SolveError, Solution};
use fjsp_stnu::stnu::{build_stnu as build, parse_stnu, write_stnu, NodeKind, Stnu};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io(path, e))
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    parse_fjs(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_network(path: &Path) -> Result<Stnu, CliError> {
    parse_stnu(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn solve_error(e: SolveError) -> CliError {
    match e {
        SolveError::Infeasible(_) | SolveError::TimeLimitNoSolution => CliError::Negative(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

fn int_list(s: &str, what: &str) -> Result<Vec<Tu>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<Tu>().map_err(|_| CliError::Usage(format!("{what}: {t:?} is not an integer"))))
        .collect()
}

/// Nominal makespan of the pure makespan schedule, feeding the soft slack
/// recipe.
fn nominal_makespan(run: &mut Run, inst: &Instance) -> Result<Tu, CliError> {
    let s = run.settings().clone();
    let d = DeadlineSpec::derive(inst, &s.uncertainty(), DeadlineMode::Soft, 0);
    let sol = run.stage("recipe_solve", || solve_fjsp(inst, &s.solve_config(ObjectiveWeights::default(), d)));
    Ok(sol.map_err(solve_error)?.makespan)
}

/// Slack from the flags or config, else the critical slack in hard mode
/// and the soft recipe in soft mode. `makespan` skips the recipe solve
/// when a schedule is already at hand.
fn resolve_delta(run: &mut Run, inst: &Instance, mode: DeadlineMode, makespan: Option<Tu>) -> Result<Tu, CliError> {
    let u = run.settings().uncertainty();
    let (delta, source) = match (run.settings().delta, mode) {
        (Some(d), _) => (d, "configured"),
        (None, DeadlineMode::Hard) => (delta_star(inst, &u), "critical_slack"),
        (None, DeadlineMode::Soft) => {
            let m = match makespan {
                Some(m) => m,
                None => nominal_makespan(run, inst)?,
            };
            (delta_soft_recipe(inst, &u, m as f64), "soft_recipe")
        }
    };
    run.manifest.delta = Some(delta);
    run.manifest.delta_source = Some(source.into());
    Ok(delta)
}

fn traces_csv(traces: &[ExecutionTrace], jobs: usize) -> String {
    let mut out = String::from("sample,makespan");
    for j in 0..jobs {
        out.push_str(&format!(",completion_{j}"));
    }
    for j in 0..jobs {
        out.push_str(&format!(",tardy_{j}"));
    }
    out.push('\n');
    for (i, t) in traces.iter().enumerate() {
        out.push_str(&t.csv_row(i));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------

pub fn solve(flags: &Flags, path: &Path) -> Result<(), CliError> {
    let s = Settings::resolve(flags, "out/solve")?;
    let inst = load_instance(path)?;
    let mut run = Run::new("solve", &[path], s);
    let r = solve_body(&mut run, &inst);
    run.finish(r)
}

fn solve_body(run: &mut Run, inst: &Instance) -> Result<(), CliError> {
    let s = run.settings().clone();
    let delta = resolve_delta(run, inst, s.mode, None)?;
    let d = DeadlineSpec::derive(inst, &s.uncertainty(), s.mode, delta);
    let sol = run.stage("solve", || solve_fjsp(inst, &s.solve_config(s.weights, d))).map_err(solve_error)?;
    run.write("solution.json", &(sol.to_json() + "\n"))?;
    println!(
        "makespan {} objective {} optimal {} nodes {}",
        sol.makespan, sol.objective_value, sol.stats.proven_optimal, sol.stats.nodes
    );
    Ok(())
}

pub fn build_stnu(flags: &Flags, path: &Path, solution: &Path) -> Result<(), CliError> {
    let s = Settings::resolve(flags, "out/build-stnu")?;
    let inst = load_instance(path)?;
    let sol = Solution::from_json(&read(solution)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", solution.display())))?;
    let mut run = Run::new("build-stnu", &[path, solution], s);
    let r = (|| {
        let s = run.settings().clone();
        let delta = resolve_delta(&mut run, &inst, s.mode, Some(sol.makespan))?;
        let d = DeadlineSpec::derive(&inst, &s.uncertainty(), s.mode, delta);
        let g = run
            .stage("build_stnu", || build(&sol, &inst, &s.uncertainty(), &d))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        run.write("network.stnu", &write_stnu(&g))?;
        println!("nodes {} requirements {} contingent {}", g.node_count(), g.requirements.len(), g.contingents.len());
        Ok(())
    })();
    run.finish(r)
}

pub fn check_dc(flags: &Flags, path: &Path) -> Result<(), CliError> {
    let s = Settings::resolve(flags, "out/check-dc")?;
    let g = load_network(path)?;
    let mut run = Run::new("check-dc", &[path], s);
    let r = (|| {
        let v = run.stage("check_dc", || dc_check(&g));
        run.write_json("verdict.json", &v)?;
        println!("controllable {}", v.controllable);
        if v.controllable {
            Ok(())
        } else {
            Err(CliError::Negative("network is not dynamically controllable".into()))
        }
    })();
    run.finish(r)
}

/// Per-job deadlines read off the network's origin -> job finish arcs.
fn network_deadlines(g: &Stnu) -> Option<Vec<Tu>> {
    let origin = g.origin()?;
    let finishes: Vec<_> = g.nodes.iter().filter(|n| n.kind == NodeKind::JobFinish).collect();
    if finishes.is_empty() {
        return None;
    }
    let mut out = vec![None; finishes.len()];
    for n in finishes {
        let j = n.reference?;
        let w = g.requirements.iter().filter(|e| e.from == origin && e.to == n.id).map(|e| e.weight).min()?;
        *out.get_mut(j)? = Some(w);
    }
    out.into_iter().collect()
}

pub fn execute(flags: &Flags, path: &Path, durations: Option<&str>, deadlines: Option<&str>) -> Result<(), CliError> {
    let s = Settings::resolve(flags, "out/execute")?;
    let g = load_network(path)?;
    let durations = durations.map(|d| int_list(d, "durations")).transpose()?;
    let per_job = match deadlines {
        Some(d) => int_list(d, "deadlines")?,
        None => network_deadlines(&g).ok_or_else(|| {
            CliError::Usage("no deadlines: pass --deadlines or use a network with deadline arcs".into())
        })?,
    };
    let mut run = Run::new("execute", &[path], s);
    let r = (|| {
        let s = run.settings().clone();
        let df = match run.stage("dispatchable_form", || dispatchable_form(&g)) {
            Ok(df) => df,
            Err(DcError::NotControllable(v)) => {
                run.write_json("verdict.json", &v)?;
                return Err(CliError::Negative("network is not dynamically controllable".into()));
            }
            Err(e) => return Err(CliError::Usage(e.to_string())),
        };
        let spec = DeadlineSpec::explicit(DeadlineMode::Soft, per_job.clone());
        match durations {
            Some(v) => {
                let mut t = run
                    .stage("execute", || fjsp_stnu::rte::execute(&df, &v, s.policy))
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                t.apply_deadlines(&per_job);
                run.write_json("trace.json", &t)?;
                run.write("traces.csv", &traces_csv(std::slice::from_ref(&t), per_job.len()))?;
                println!("makespan {} violations {}", t.realized_makespan, t.violations.len());
            }
            None => {
                let (rep, traces) = run
                    .stage("monte_carlo", || {
                        run_monte_carlo_traces(&df, &spec, Sampler::uniform(s.seed), s.samples, s.policy, s.jobs)
                    })
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                run.write_json("metrics.json", &rep)?;
                run.write("traces.csv", &traces_csv(&traces, per_job.len()))?;
                print_report(&rep);
            }
        }
        Ok(())
    })();
    run.finish(r)
}

fn print_report(r: &fjsp_stnu::sim::MetricsReport) {
    println!(
        "samples {} mean makespan {:.2} p95 {} stddev {:.2} p_tardy {:.3} p_early {:.3} violations {}",
        r.n_samples, r.mean_makespan, r.p95_makespan, r.makespan_stddev, r.p_tardy, r.p_early, r.violations
    );
}

// ---------------------------------------------------------------------

pub fn pipeline(flags: &Flags, path: &Path) -> Result<(), CliError> {
    let s = Settings::resolve(flags, "out/pipeline")?;
    let inst = load_instance(path)?;
    let mut run = Run::new("pipeline", &[path], s);
    let r = pipeline_body(&mut run, &inst).map(|_| ());
    run.finish(r)
}

#[derive(Debug, Default, Clone, Serialize)]
struct StageTimes {
    cp_ms: f64,
    build_ms: f64,
    dc_ms: f64,
    rte_ms: f64,
}

/// Solve, encode, check, simulate; artifacts go to the run directory.
fn pipeline_body(run: &mut Run, inst: &Instance) -> Result<(Tu, Tu, StageTimes), CliError> {
    let s = run.settings().clone();
    let u = s.uncertainty();
    let delta = resolve_delta(run, inst, s.mode, None)?;
    let d = DeadlineSpec::derive(inst, &u, s.mode, delta);
    let mut times = StageTimes::default();
    let t = Instant::now();
    let sol = run.stage("solve", || solve_fjsp(inst, &s.solve_config(s.weights, d.clone())));
    times.cp_ms = t.elapsed().as_secs_f64() * 1e3;
    let sol = sol.map_err(solve_error)?;
    run.write("solution.json", &(sol.to_json() + "\n"))?;
    let t = Instant::now();
    let g = run.stage("build_stnu", || build(&sol, inst, &u, &d)).map_err(|e| CliError::Usage(e.to_string()))?;
    times.build_ms = t.elapsed().as_secs_f64() * 1e3;
    run.write("network.stnu", &write_stnu(&g))?;
    let t = Instant::now();
    let verdict = run.stage("check_dc", || dc_check(&g));
    times.dc_ms = t.elapsed().as_secs_f64() * 1e3;
    run.write_json("verdict.json", &verdict)?;
    if !verdict.controllable {
        return Err(CliError::Negative(format!(
            "schedule (makespan {}) is not dynamically controllable at alpha {} delta {delta}",
            sol.makespan, s.alpha
        )));
    }
    let t = Instant::now();
    let mc = run.stage("rte_monte_carlo", || {
        let df = dispatchable_form(&g)?;
        run_monte_carlo_traces(&df, &d, Sampler::uniform(s.seed), s.samples, s.policy, s.jobs)
            .map_err(|e| DcError::Invalid(fjsp_stnu::stnu::StnuError::Mismatch(e.to_string())))
    });
    times.rte_ms = t.elapsed().as_secs_f64() * 1e3;
    let (mut rep, traces) = mc.map_err(|e| CliError::Usage(e.to_string()))?;
    if !d.is_hard() {
        // slack of the soft schedule measured against its deadlines
        rep.slack_s = dispatchable_form(&g.with_deadline_arcs(&d.per_job)).ok().and_then(|df| total_slack(&df).ok());
    }
    run.write_json("metrics.json", &rep)?;
    run.write("traces.csv", &traces_csv(&traces, inst.job_count()))?;
    println!("makespan {} delta {delta}", sol.makespan);
    print_report(&rep);
    Ok((delta, sol.makespan, times))
}

// ---------------------------------------------------------------------

pub fn sweep_slack(flags: &Flags, path: &Path) -> Result<(), CliError> {
    let s = Settings::resolve(flags, "out/sweep-slack")?;
    let inst = load_instance(path)?;
    let mut run = Run::new("sweep slack", &[path], s);
    let r = (|| {
        let cfg = run.settings().sweep_config();
        let prof = run
            .stage("sweep", || calibrate::sweep_slack(&inst, &cfg))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        run.write_csv("fig2_slack.csv", &prof.cells)?;
        run.write_json("slack_summary.json", &prof.summary)?;
        for s in &prof.summary {
            println!(
                "alpha {} delta* {} min cp {:?} min dc {:?}",
                s.alpha, s.delta_star, s.min_delta_cp, s.min_delta_dc
            );
        }
        if prof.cells.iter().all(|c| c.error.is_some()) {
            return Err(CliError::Negative("every cell failed".into()));
        }
        Ok(())
    })();
    run.finish(r)
}

#[derive(Serialize)]
struct TidyRow {
    w_e: i64,
    w_t: i64,
    seed: u64,
    metric: &'static str,
    value: String,
}

fn tidy(c: &WeightCell) -> Vec<TidyRow> {
    fn opt<T: ToString>(v: Option<T>) -> String {
        v.map_or(String::new(), |v| v.to_string())
    }
    let mut m: Vec<(&'static str, String)> = vec![
        ("nominal_makespan", opt(c.nominal_makespan)),
        ("objective", opt(c.objective)),
        ("nominal_earliness", opt(c.nominal_earliness)),
        ("nominal_tardiness", opt(c.nominal_tardiness)),
        ("dc", opt(c.dc)),
        ("dc_with_deadlines", opt(c.dc_with_deadlines)),
        ("slack_s", opt(c.slack_s)),
    ];
    if let Some(r) = &c.report {
        m.extend([
            ("mean_makespan", r.mean_makespan.to_string()),
            ("p95_makespan", r.p95_makespan.to_string()),
            ("makespan_stddev", r.makespan_stddev.to_string()),
            ("p_tardy", r.p_tardy.to_string()),
            ("p_early", r.p_early.to_string()),
            ("p_boundary", r.p_boundary.to_string()),
            ("mean_total_earliness", r.mean_total_earliness.to_string()),
            ("mean_total_tardiness", r.mean_total_tardiness.to_string()),
            ("violations", r.violations.to_string()),
        ]);
    }
    m.extend([
        ("solve_ms", c.solve_ms.to_string()),
        ("dc_ms", c.dc_ms.to_string()),
        ("mc_ms", c.mc_ms.to_string()),
    ]);
    if let Some(e) = &c.error {
        m.push(("error", e.clone()));
    }
    m.into_iter().map(|(metric, value)| TidyRow { w_e: c.w_e, w_t: c.w_t, seed: c.seed, metric, value }).collect()
}

#[derive(Serialize)]
struct PerJobRow {
    w_e: i64,
    w_t: i64,
    job: usize,
    p_tardy: f64,
    p_early: f64,
}

#[derive(Serialize)]
struct ParetoRow {
    w_e: i64,
    w_t: i64,
    mean_makespan: f64,
    p_tardy: f64,
    p_early: f64,
    mean_total_earliness: f64,
    makespan_stddev: f64,
}

pub fn sweep_weights(flags: &Flags, path: &Path) -> Result<(), CliError> {
    let s = Settings::resolve(flags, "out/sweep-weights")?;
    let inst = load_instance(path)?;
    let mut run = Run::new("sweep weights", &[path], s);
    let r = (|| {
        let delta = resolve_delta(&mut run, &inst, DeadlineMode::Soft, None)?;
        let cfg = run.settings().sweep_config();
        let u = run.settings().uncertainty();
        let grid = run
            .stage("sweep", || calibrate::sweep_weights(&inst, &cfg, &u, delta))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let rows: Vec<TidyRow> = grid.cells.iter().flat_map(tidy).collect();
        run.write_csv("weights_grid.csv", &rows)?;
        let per_job: Vec<PerJobRow> = grid
            .cells
            .iter()
            .filter_map(|c| c.report.as_ref().map(|r| (c, r)))
            .flat_map(|(c, r)| {
                (0..r.per_job_tardy.len()).map(move |job| PerJobRow {
                    w_e: c.w_e,
                    w_t: c.w_t,
                    job,
                    p_tardy: r.per_job_tardy[job],
                    p_early: r.per_job_early[job],
                })
            })
            .collect();
        run.write_csv("fig8_per_job_tardy.csv", &per_job)?;
        let front: Vec<ParetoRow> = calibrate::pareto_front(&grid)
            .unwrap_or_default()
            .into_iter()
            .map(|p| ParetoRow {
                w_e: p.w_e,
                w_t: p.w_t,
                mean_makespan: p.report.mean_makespan,
                p_tardy: p.report.p_tardy,
                p_early: p.report.p_early,
                mean_total_earliness: p.report.mean_total_earliness,
                makespan_stddev: p.report.makespan_stddev,
            })
            .collect();
        run.write_csv("fig9_pareto.csv", &front)?;
        run.write_json("weights_summary.json", &grid)?;
        println!("delta_soft {delta}; {} cells, {} on the front", grid.cells.len(), front.len());
        if grid.cells.iter().all(|c| c.error.is_some()) {
            return Err(CliError::Negative("every cell failed".into()));
        }
        Ok(())
    })();
    run.finish(r)
}

#[derive(Serialize)]
struct RobustnessCsv {
    alpha: f64,
    seed: u64,
    mean_makespan: Option<f64>,
    p95_makespan: Option<Tu>,
    makespan_stddev: Option<f64>,
    p_tardy: Option<f64>,
    p_early: Option<f64>,
    p_boundary: Option<f64>,
    error: Option<String>,
}

pub fn sweep_robustness(flags: &Flags, path: &Path) -> Result<(), CliError> {
    let s = Settings::resolve(flags, "out/sweep-robustness")?;
    let inst = load_instance(path)?;
    let mut run = Run::new("sweep robustness", &[path], s);
    let r = (|| {
        let delta = resolve_delta(&mut run, &inst, DeadlineMode::Soft, None)?;
        let s = run.settings().clone();
        let cfg = s.sweep_config();
        let prof = run
            .stage("sweep", || calibrate::robustness_profile(&inst, s.weights, delta, &cfg, &s.uncertainty()))
            .map_err(|e| CliError::Negative(e.to_string()))?;
        let rows: Vec<RobustnessCsv> = prof
            .rows
            .iter()
            .map(|r| RobustnessCsv {
                alpha: r.alpha,
                seed: r.seed,
                mean_makespan: r.report.as_ref().map(|x| x.mean_makespan),
                p95_makespan: r.report.as_ref().map(|x| x.p95_makespan),
                makespan_stddev: r.report.as_ref().map(|x| x.makespan_stddev),
                p_tardy: r.report.as_ref().map(|x| x.p_tardy),
                p_early: r.report.as_ref().map(|x| x.p_early),
                p_boundary: r.report.as_ref().map(|x| x.p_boundary),
                error: r.error.clone(),
            })
            .collect();
        run.write_csv("fig6_robustness.csv", &rows)?;
        run.write_json("robustness.json", &prof)?;
        println!("nominal makespan {}; {} alphas", prof.nominal_makespan, rows.len());
        if prof.rows.iter().all(|r| r.error.is_some()) {
            return Err(CliError::Negative("every cell failed".into()));
        }
        Ok(())
    })();
    run.finish(r)
}

#[derive(Serialize)]
struct ScalingRow {
    instance: String,
    tasks: usize,
    jobs: usize,
    machines: usize,
    delta: Option<Tu>,
    makespan: Option<Tu>,
    controllable: bool,
    cp_ms: f64,
    build_ms: f64,
    dc_ms: f64,
    rte_ms: f64,
    total_ms: f64,
    error: Option<String>,
}

/// Runs the pipeline per instance in a subdirectory and tabulates stage
/// timings. Hard mode at the critical slack unless configured otherwise.
pub fn sweep_scaling(flags: &Flags, paths: &[PathBuf]) -> Result<(), CliError> {
    let mut flags = flags.clone();
    flags.mode.get_or_insert_with(|| "hard".into());
    let s = Settings::resolve(&flags, "out/sweep-scaling")?;
    let insts: Vec<Instance> = paths.iter().map(|p| load_instance(p)).collect::<Result<_, _>>()?;
    let inputs: Vec<&Path> = paths.iter().map(|p| p.as_path()).collect();
    let mut run = Run::new("sweep scaling", &inputs, s.clone());
    let r = (|| {
        let mut rows = Vec::new();
        for (i, (p, inst)) in paths.iter().zip(&insts).enumerate() {
            let stem = p.file_stem().map_or(format!("instance{i}"), |s| s.to_string_lossy().into_owned());
            let mut sub_settings = s.clone();
            sub_settings.out = s.out.join(&stem);
            let mut sub = Run::new("pipeline", &[p.as_path()], sub_settings);
            let t0 = Instant::now();
            let res = pipeline_body(&mut sub, inst);
            let total_ms = t0.elapsed().as_secs_f64() * 1e3;
            let delta = sub.manifest.delta;
            let timing = |name: &str| sub.manifest.stages.iter().find(|x| x.name == name).map_or(0.0, |x| x.ms);
            let mut row = ScalingRow {
                instance: stem.clone(),
                tasks: inst.task_count(),
                jobs: inst.job_count(),
                machines: inst.machine_count(),
                delta,
                makespan: None,
                controllable: false,
                cp_ms: timing("solve"),
                build_ms: timing("build_stnu"),
                dc_ms: timing("check_dc"),
                rte_ms: timing("rte_monte_carlo"),
                total_ms,
                error: None,
            };
            match &res {
                Ok((_, m, _)) => {
                    row.makespan = Some(*m);
                    row.controllable = true;
                }
                Err(CliError::Negative(e)) | Err(CliError::Usage(e)) => row.error = Some(e.clone()),
            }
            let sub_res = sub.finish(res.map(|_| ()));
            if let Err(CliError::Usage(e)) = sub_res {
                return Err(CliError::Usage(e));
            }
            run.manifest.outputs.push(format!("{stem}/manifest.json"));
            println!(
                "{stem}: tasks {} cp {:.1}ms dc {:.2}ms rte {:.1}ms total {:.1}ms",
                row.tasks, row.cp_ms, row.dc_ms, row.rte_ms, row.total_ms
            );
            rows.push(row);
        }
        run.write_csv("scaling_stages.csv", &rows)?;
        if rows.iter().all(|r| !r.controllable) {
            return Err(CliError::Negative("no instance completed the pipeline".into()));
        }
        Ok(())
    })();
    run.finish(r)
}

