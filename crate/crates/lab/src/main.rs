use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lsl_lab::config::{self, ExperimentKind};

/// Seeded experiments for single-logarithm laws on 2-D random fields.
#[derive(Parser)]
#[command(name = "lsl-lab", version)]
struct Cli {
    #[arg(value_enum)]
    kind: ExperimentKind,
    /// JSON configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Does not change any output.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn main() -> ExitCode {
    match main2() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn main2() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    let mut doc = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| anyhow::anyhow!("reading {}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("malformed configuration {}: {e}", p.display()))?
        }
        None => config::ExperimentConfig::for_kind(cli.kind),
    };
    if let Some(s) = cli.seed {
        doc.seed = Some(s);
    }
    let v = config::validate(doc, Some(cli.kind))?;
    for w in &v.warnings {
        eprintln!("warning: {w}");
    }
    let out = cli
        .out
        .clone()
        .or_else(|| v.config.output.clone())
        .unwrap_or_else(|| PathBuf::from("lsl-out"));
    let budget = lsl_lab::budget_from_env()?;
    let manifest = lsl_lab::run(&v, &out, &budget, cli.threads)?;
    for c in &manifest.checks {
        let tag = match (c.passed, c.hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "WARN",
        };
        println!("{tag} {}: {}", c.name, c.detail);
    }
    println!("wrote {} in {:.2}s", out.display(), manifest.wall_clock_seconds);
    Ok(manifest.passed)
}
