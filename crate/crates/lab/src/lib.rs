//! Batch runner for the single-logarithm laboratory.
//!
//! A run is `config -> (tables, summary, checks)`; [`run`] adds the thread
//! pool, writes the files and the manifest.
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod runner;

use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use lsl_core::field::Budget;

pub use config::{parse_config, ExperimentConfig, ExperimentKind, Validated};
pub use output::{Check, RunManifest, RunOutput};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const BUDGET_ENV: &str = "LSL_LAB_BUDGET_MB";

/// Block budget from `LSL_LAB_BUDGET_MB`, or the default.
pub fn budget_from_env() -> anyhow::Result<Budget> {
    match std::env::var(BUDGET_ENV) {
        Ok(s) => {
            let mb: u64 = s
                .trim()
                .parse()
                .with_context(|| format!("{BUDGET_ENV} = {s:?} is not a whole number of megabytes"))?;
            Ok(Budget::from_megabytes(mb))
        }
        Err(std::env::VarError::NotPresent) => Ok(Budget::default()),
        Err(e) => Err(e).context(BUDGET_ENV),
    }
}

/// Runs on a pool of `threads` workers (0 = rayon's default).
pub fn execute(v: &Validated, budget: &Budget, threads: usize) -> anyhow::Result<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    pool.install(|| runner::run_experiment(v, budget))
}

/// Runs and writes `results.csv` (plus any extra tables), `summary.json`
/// and `manifest.json` into `out`.
pub fn run(v: &Validated, out: &Path, budget: &Budget, threads: usize) -> anyhow::Result<RunManifest> {
    let started = Instant::now();
    let result = execute(v, budget, threads)?;
    let config = serde_json::to_value(&v.config)?;
    let summary = output::summary_document(v.kind.name(), &config, &v.warnings, v.regime_violation, &result);
    let files = output::write_outputs(out, v.kind.name(), &summary, &result.tables)?;
    let manifest = RunManifest {
        schema: output::SCHEMA_VERSION,
        version: VERSION,
        kind: v.kind.name(),
        config,
        warnings: v.warnings.clone(),
        regime_violation: v.regime_violation,
        threads: if threads == 0 {
            rayon::current_num_threads()
        } else {
            threads
        },
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        passed: result.hard_failures() == 0,
        checks: result.checks,
        files,
    };
    output::write_manifest(out, &manifest)?;
    Ok(manifest)
}
