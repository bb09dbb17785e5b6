//! Output directory bookkeeping and the run manifest.

use crate::settings::Settings;
use crate::CliError;
use fjsp_stnu::instance::Tu;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub name: String,
    pub ms: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub config: Settings,
    /// Slack actually used and where it came from, when one applies.
    pub delta: Option<Tu>,
    pub delta_source: Option<String>,
    pub seeds: Vec<u64>,
    pub tool_version: String,
    pub outputs: Vec<String>,
    pub stages: Vec<Stage>,
    pub total_ms: f64,
    pub status: String,
}

/// One invocation's output directory. Nothing touches the disk until the
/// first artifact is written, so failing input validation leaves no
/// partial outputs.
pub struct Run {
    dir: PathBuf,
    started: Instant,
    pub manifest: RunManifest,
}

impl Run {
    pub fn new(subcommand: &str, inputs: &[&Path], settings: Settings) -> Run {
        Run {
            dir: settings.out.clone(),
            started: Instant::now(),
            manifest: RunManifest {
                schema_version: SCHEMA_VERSION,
                subcommand: subcommand.into(),
                inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
                seeds: vec![settings.seed],
                config: settings,
                delta: None,
                delta_source: None,
                tool_version: env!("CARGO_PKG_VERSION").into(),
                outputs: Vec::new(),
                stages: Vec::new(),
                total_ms: 0.0,
                status: "ok".into(),
            },
        }
    }

    pub fn settings(&self) -> &Settings {
        &self.manifest.config
    }

    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.manifest.stages.push(Stage { name: name.into(), ms: t0.elapsed().as_secs_f64() * 1e3 });
        out
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.dir).map_err(|e| io(&self.dir, e))?;
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| io(&path, e))?;
        self.manifest.outputs.push(name.into());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("artifact serializes");
        self.write(name, &(text + "\n"))
    }

    pub fn write_csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
        self.write(name, &String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Writes the manifest and passes `result` through.
    pub fn finish(mut self, result: Result<(), CliError>) -> Result<(), CliError> {
        self.manifest.status = match &result {
            Ok(()) => "ok".into(),
            Err(CliError::Negative(m)) => format!("negative: {m}"),
            Err(CliError::Usage(m)) => format!("error: {m}"),
        };
        self.manifest.total_ms = self.started.elapsed().as_secs_f64() * 1e3;
        std::fs::create_dir_all(&self.dir).map_err(|e| io(&self.dir, e))?;
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
        result
    }
}

pub fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}
