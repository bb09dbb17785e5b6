//! Effective run settings: built-in defaults, overlaid by the TOML config
//! file, overlaid by command-line flags.

use crate::CliError;
use clap::Args;
use fjsp_stnu::calibrate::SweepConfig;
use fjsp_stnu::instance::{Alpha, BoundsConvention, DeadlineMode, Tu, UncertaintyModel};
use fjsp_stnu::rte::ExecutionPolicy;
use fjsp_stnu::solver::{ObjectiveWeights, SolveConfig};
use fjsp_stnu::instance::DeadlineSpec;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Duration;

/// Flags shared by every subcommand. All optional so that a value left
/// unset falls through to the config file.
#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Uncertainty factor, decimal or ratio (0.6, 3/5).
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    /// Slack added to each job's minimum work to form its deadline.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<Tu>,
    /// Deadline mode: soft or hard.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    #[arg(long = "we", global = true)]
    pub w_e: Option<i64>,
    #[arg(long = "wt", global = true)]
    pub w_t: Option<i64>,
    /// Monte-Carlo replications.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// earliest_feasible or latest_safe.
    #[arg(long, global = true)]
    pub policy: Option<String>,
    /// Worker threads for sweeps and replications.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Duration bounds: per_mode or mode_envelope.
    #[arg(long, global = true)]
    pub convention: Option<String>,
    /// Branch-and-bound node budget per solve.
    #[arg(long, global = true)]
    pub node_limit: Option<u64>,
    /// Wall-clock cap per solve, seconds.
    #[arg(long, global = true)]
    pub time_limit: Option<f64>,
    /// Output directory; the manifest is written at its root.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// Config file layout. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    alpha: Option<toml::Value>,
    delta: Option<Tu>,
    mode: Option<String>,
    we: Option<i64>,
    wt: Option<i64>,
    samples: Option<usize>,
    seed: Option<u64>,
    policy: Option<String>,
    jobs: Option<usize>,
    convention: Option<String>,
    node_limit: Option<u64>,
    time_limit: Option<f64>,
    out: Option<PathBuf>,
    #[serde(default)]
    sweep: SweepFile,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    alphas: Option<Vec<toml::Value>>,
    delta_range: Option<(Tu, Tu, Tu)>,
    we_grid: Option<Vec<i64>>,
    wt_grid: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub alpha: Alpha,
    /// None: derived per subcommand (critical slack when hard, the soft
    /// recipe when soft).
    pub delta: Option<Tu>,
    pub mode: DeadlineMode,
    pub weights: ObjectiveWeights,
    pub samples: usize,
    pub seed: u64,
    pub policy: ExecutionPolicy,
    pub jobs: usize,
    pub convention: BoundsConvention,
    pub node_limit: u64,
    pub time_limit_secs: f64,
    pub out: PathBuf,
    pub sweep_alphas: Vec<Alpha>,
    pub delta_range: (Tu, Tu, Tu),
    pub w_e_grid: Vec<i64>,
    pub w_t_grid: Vec<i64>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_alpha(s: &str) -> Result<Alpha, CliError> {
    s.parse().map_err(|e| usage(format!("alpha {s:?}: {e}")))
}

fn alpha_value(v: &toml::Value) -> Result<Alpha, CliError> {
    match v {
        toml::Value::String(s) => parse_alpha(s),
        toml::Value::Integer(i) => parse_alpha(&i.to_string()),
        toml::Value::Float(f) => Alpha::from_f64(*f).map_err(|e| usage(format!("alpha {f}: {e}"))),
        other => Err(usage(format!("alpha must be a number or string, got {other}"))),
    }
}

fn parse_mode(s: &str) -> Result<DeadlineMode, CliError> {
    match s {
        "soft" => Ok(DeadlineMode::Soft),
        "hard" => Ok(DeadlineMode::Hard),
        other => Err(usage(format!("unknown mode {other:?} (soft | hard)"))),
    }
}

fn parse_convention(s: &str) -> Result<BoundsConvention, CliError> {
    match s {
        "per_mode" => Ok(BoundsConvention::PerMode),
        "mode_envelope" | "envelope" => Ok(BoundsConvention::ModeEnvelope),
        other => Err(usage(format!("unknown convention {other:?} (per_mode | mode_envelope)"))),
    }
}

impl Settings {
    pub fn resolve(flags: &Flags, default_out: &str) -> Result<Settings, CliError> {
        let file: FileConfig = match &flags.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        let sweep_defaults = SweepConfig::default();
        let alpha = match (&flags.alpha, &file.alpha) {
            (Some(s), _) => parse_alpha(s)?,
            (None, Some(v)) => alpha_value(v)?,
            (None, None) => parse_alpha("0.5")?,
        };
        let mode = parse_mode(flags.mode.as_deref().or(file.mode.as_deref()).unwrap_or("soft"))?;
        let policy = flags
            .policy
            .as_deref()
            .or(file.policy.as_deref())
            .map(str::parse::<ExecutionPolicy>)
            .transpose()
            .map_err(usage)?
            .unwrap_or_default();
        let convention = flags
            .convention
            .as_deref()
            .or(file.convention.as_deref())
            .map(parse_convention)
            .transpose()?
            .unwrap_or_default();
        let sweep_alphas = match &file.sweep.alphas {
            Some(v) => v.iter().map(alpha_value).collect::<Result<_, _>>()?,
            None => sweep_defaults.alphas.clone(),
        };
        let s = Settings {
            alpha,
            delta: flags.delta.or(file.delta),
            mode,
            weights: ObjectiveWeights::new(flags.w_e.or(file.we).unwrap_or(0), flags.w_t.or(file.wt).unwrap_or(0)),
            samples: flags.samples.or(file.samples).unwrap_or(fjsp_stnu::sim::DEFAULT_SAMPLES),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            policy,
            jobs: flags.jobs.or(file.jobs).unwrap_or(1),
            convention,
            node_limit: flags.node_limit.or(file.node_limit).unwrap_or(sweep_defaults.node_limit),
            time_limit_secs: flags.time_limit.or(file.time_limit).unwrap_or(sweep_defaults.time_limit_secs),
            out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(default_out)),
            sweep_alphas,
            delta_range: file.sweep.delta_range.unwrap_or(sweep_defaults.delta_range),
            w_e_grid: file.sweep.we_grid.unwrap_or(sweep_defaults.w_e_grid),
            w_t_grid: file.sweep.wt_grid.unwrap_or(sweep_defaults.w_t_grid),
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.weights.w_e < 0 || self.weights.w_t < 0 {
            return Err(usage("weights must be non-negative"));
        }
        if self.samples == 0 {
            return Err(usage("samples must be at least 1"));
        }
        if self.jobs == 0 {
            return Err(usage("jobs must be at least 1"));
        }
        if !(self.time_limit_secs > 0.0) {
            return Err(usage("time limit must be positive"));
        }
        if self.delta.is_some_and(|d| d < 0) {
            return Err(usage("delta must be non-negative"));
        }
        Ok(())
    }

    pub fn uncertainty(&self) -> UncertaintyModel {
        UncertaintyModel::new(self.alpha).with_convention(self.convention)
    }

    pub fn solve_config(&self, weights: ObjectiveWeights, deadlines: DeadlineSpec) -> SolveConfig {
        let mut c = SolveConfig::new(weights, deadlines);
        c.node_limit = self.node_limit;
        c.time_limit = Duration::from_secs_f64(self.time_limit_secs);
        c.seed = self.seed;
        c
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            alphas: self.sweep_alphas.clone(),
            delta_range: self.delta_range,
            w_e_grid: self.w_e_grid.clone(),
            w_t_grid: self.w_t_grid.clone(),
            n_samples: self.samples,
            seed: self.seed,
            policy: self.policy,
            convention: self.convention,
            node_limit: self.node_limit,
            time_limit_secs: self.time_limit_secs,
            jobs: self.jobs,
        }
    }
}
