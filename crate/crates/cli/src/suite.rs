//! Experiment suites: a list of problem files pushed through a pipeline of
//! stages, recorded in a manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::artifacts::OutputDir;
use crate::artifacts::{sha256_file, Artifact};
use crate::error::{CliError, CliResult};
use crate::stages::{run_stage, SpecContext, Stage, StageParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSuite {
    pub name: String,
    /// Problem files, relative to the suite file.
    pub specs: Vec<PathBuf>,
    pub pipeline: Vec<Stage>,
    #[serde(default)]
    pub seed: u64,
    /// Default output root, relative to the suite file.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: StageParams,
    #[serde(skip)]
    base: PathBuf,
}

impl ExperimentSuite {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut suite: ExperimentSuite = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        suite.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        suite.check()?;
        Ok(suite)
    }

    /// Problem file paths resolved against the suite location.
    pub fn spec_paths(&self) -> Vec<PathBuf> {
        self.specs.iter().map(|p| self.base.join(p)).collect()
    }

    pub fn default_output(&self) -> Option<PathBuf> {
        self.output_dir.as_ref().map(|p| self.base.join(p))
    }

    /// Rejects empty suites and stages that read a solution before `solve` ran.
    pub fn check(&self) -> CliResult<()> {
        if self.specs.is_empty() {
            return Err(CliError::Validation(format!(
                "suite `{}` lists no specs",
                self.name
            )));
        }
        if self.pipeline.is_empty() {
            return Err(CliError::Validation(format!(
                "suite `{}` has an empty pipeline",
                self.name
            )));
        }
        let mut solved = false;
        for &stage in &self.pipeline {
            if stage.needs_solution() && !solved {
                return Err(CliError::Validation(format!(
                    "suite `{}`: stage `{stage}` needs `solve` earlier in the pipeline",
                    self.name
                )));
            }
            solved |= stage == Stage::Solve;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub spec: String,
    pub stage: Stage,
    pub pass: bool,
    pub wall_time_s: f64,
    pub artifacts: Vec<Artifact>,
    pub summary: Value,
    pub error: Option<String>,
    /// Exit class of the failure: 1 for validation, 2 for numerics, 3 for I/O.
    pub error_code: Option<i32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub suite: String,
    pub seed: u64,
    pub fracisaacs_version: String,
    pub cli_version: String,
    pub inputs: Vec<InputRecord>,
    pub params: StageParams,
    pub stages: Vec<StageRecord>,
    pub pass: bool,
    /// True when `fail_fast` cut the run short.
    pub stopped_early: bool,
}

impl Manifest {
    /// Process exit code: 0 when every stage passed, otherwise the class of
    /// the first failure (a failed check without an error counts as numeric,
    /// a failed `validate` as validation).
    pub fn exit_code(&self) -> i32 {
        match self.stages.iter().find(|s| !s.pass) {
            None => 0,
            Some(s) => s
                .error_code
                .unwrap_or(if s.stage == Stage::Validate { 1 } else { 2 }),
        }
    }
}

/// Runs every spec through the pipeline and writes `manifest.json` into `out`.
///
/// Every problem file is parsed before any stage runs, so a malformed input
/// stops the suite without partial output.
pub fn run_suite(
    suite: &ExperimentSuite,
    seed: u64,
    out: &Path,
    fail_fast: bool,
) -> CliResult<Manifest> {
    suite.check()?;
    let paths = suite.spec_paths();
    let mut contexts = Vec::with_capacity(paths.len());
    let mut inputs = Vec::with_capacity(paths.len());
    for path in &paths {
        contexts.push(SpecContext::load(path)?);
        inputs.push(InputRecord {
            path: path.to_string_lossy().replace('\\', "/"),
            sha256: sha256_file(path)?,
        });
    }
    let mut names: Vec<&str> = contexts.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Validation(format!(
            "two specs share the name `{}`",
            w[0]
        )));
    }
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut stopped_early = false;
    'specs: for ctx in &mut contexts {
        for &stage in &suite.pipeline {
            let sub = Path::new(&ctx.name).join(stage.as_str());
            let stage_dir = out.join(&sub);
            if stage_dir.exists() {
                fs::remove_dir_all(&stage_dir).map_err(|e| CliError::io(&stage_dir, e))?;
            }
            let start = Instant::now();
            let result = OutputDir::create(out, &sub)
                .and_then(|dir| run_stage(stage, ctx, &suite.params, &mut rng, dir));
            let wall_time_s = start.elapsed().as_secs_f64();
            let record = match result {
                Ok(outcome) => StageRecord {
                    spec: ctx.name.clone(),
                    stage,
                    pass: outcome.pass,
                    wall_time_s,
                    artifacts: outcome.artifacts,
                    summary: outcome.summary,
                    error: None,
                    error_code: None,
                },
                Err(e) => StageRecord {
                    spec: ctx.name.clone(),
                    stage,
                    pass: false,
                    wall_time_s,
                    artifacts: Vec::new(),
                    summary: Value::Null,
                    error: Some(e.to_string()),
                    error_code: Some(e.exit_code()),
                },
            };
            let failed = !record.pass;
            records.push(record);
            if failed && fail_fast {
                stopped_early = true;
                break 'specs;
            }
        }
    }

    let manifest = Manifest {
        suite: suite.name.clone(),
        seed,
        fracisaacs_version: fracisaacs::VERSION.to_owned(),
        cli_version: crate::VERSION.to_owned(),
        inputs,
        params: suite.params.clone(),
        pass: records.iter().all(|r| r.pass),
        stages: records,
        stopped_early,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::io(out, e))?;
    text.push('\n');
    let file = out.join("manifest.json");
    fs::write(&file, text).map_err(|e| CliError::io(&file, e))?;
    Ok(manifest)
}
