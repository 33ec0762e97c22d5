//! Result tables, summaries and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Failing hard checks make the run fail.
    pub hard: bool,
    pub detail: String,
}

impl Check {
    pub fn hard(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            hard: true,
            detail: detail.into(),
        }
    }

    pub fn soft(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            hard: false,
            ..Check::hard(name, passed, detail)
        }
    }
}

/// One CSV file held in memory until the run finishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&'static str]) -> Self {
        Table {
            file: file.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Bytes of the CSV, schema comment line first.
    pub fn to_bytes(&self, kind: &str) -> anyhow::Result<Vec<u8>> {
        let mut out = format!(
            "# lsl-lab schema={SCHEMA_VERSION} kind={kind} columns={}\n",
            self.header.join(",")
        )
        .into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(out)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Everything a run produced, before it touches the disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    /// Kind-specific results; keys are sorted when written.
    pub summary: Value,
    pub checks: Vec<Check>,
}

impl RunOutput {
    pub fn hard_failures(&self) -> usize {
        self.checks.iter().filter(|c| c.hard && !c.passed).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub version: &'static str,
    pub kind: &'static str,
    pub config: Value,
    pub warnings: Vec<String>,
    pub regime_violation: bool,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub files: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The deterministic summary document: no timings, no thread counts.
pub fn summary_document(
    kind: &str,
    config: &Value,
    warnings: &[String],
    regime_violation: bool,
    out: &RunOutput,
) -> Value {
    serde_json::json!({
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "config": config,
        "warnings": warnings,
        "regime_violation": regime_violation,
        "checks": out.checks,
        "passed": out.hard_failures() == 0,
        "results": out.summary,
    })
}

/// Writes the tables and `summary.json`, returning their digests.
pub fn write_outputs(dir: &Path, kind: &str, summary: &Value, tables: &[Table]) -> anyhow::Result<Vec<FileDigest>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> anyhow::Result<()> {
        let path: PathBuf = dir.join(name);
        fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
        files.push(FileDigest {
            file: name.to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    };
    for t in tables {
        emit(&t.file, t.to_bytes(kind)?)?;
    }
    let mut s = serde_json::to_vec_pretty(summary)?;
    s.push(b'\n');
    emit("summary.json", s)?;
    Ok(files)
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> anyhow::Result<()> {
    let mut s = serde_json::to_vec_pretty(manifest)?;
    s.push(b'\n');
    let path = dir.join("manifest.json");
    fs::write(&path, s).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_schema_line_and_fixed_columns() {
        let mut t = Table::new("results.csv", &["x", "numeric_M", "closed_form", "ratio"]);
        t.push(vec![num(1e4), num(0.5), num(0.25), num(2.0)]);
        let text = String::from_utf8(t.to_bytes("verify-appendix").unwrap()).unwrap();
        let mut lines = text.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("# lsl-lab schema=1 kind=verify-appendix"));
        assert_eq!(lines.next().unwrap(), "x,numeric_M,closed_form,ratio");
        assert_eq!(lines.next().unwrap(), "10000,0.5,0.25,2");
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345.678] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
