use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: u64 = 1;

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Artifacts of one experiment run.
pub struct Run {
    out: PathBuf,
    results: Map<String, Value>,
    assertions: BTreeMap<String, bool>,
    files: Vec<String>,
    stdout: Option<String>,
}

impl Run {
    pub fn new(out: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(out)
            .map_err(|e| CliError::Validation(format!("cannot create output directory {}: {e}", out.display())))?;
        let probe = out.join(".polyvar-write-test");
        std::fs::write(&probe, b"")
            .and_then(|_| std::fs::remove_file(&probe))
            .map_err(|e| CliError::Validation(format!("output directory {} is not writable: {e}", out.display())))?;
        Ok(Self { out: out.to_path_buf(), results: Map::new(), assertions: BTreeMap::new(), files: Vec::new(), stdout: None })
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        self.assertions.insert(name.to_string(), ok);
    }

    /// Replace the default `key = value` listing on stdout.
    pub fn print(&mut self, text: String) {
        self.stdout = Some(text);
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.out.join(name);
        let io = |e: csv::Error| CliError::Validation(format!("writing {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Validation(format!("writing {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Validation(format!("writing {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Write `summary.json`, print the results and return whether every
    /// assertion held.
    pub fn finish(mut self, experiment: &str, parameters: &Map<String, Value>, wall_time: f64) -> Result<bool, CliError> {
        let passed = self.assertions.values().all(|ok| *ok);
        self.files.push("summary.json".into());
        let summary = json!({
            "schema_version": SCHEMA_VERSION,
            "experiment": experiment,
            "parameters": parameters,
            "results": self.results,
            "assertions": self.assertions,
            "assertions_passed": passed,
            "outputs": self.files,
            "wall_time_seconds": wall_time,
        });
        let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Validation(e.to_string()))? + "\n";
        let path = self.out.join("summary.json");
        std::fs::write(&path, text).map_err(|e| CliError::Validation(format!("writing {}: {e}", path.display())))?;

        match self.stdout.take() {
            Some(s) => println!("{s}"),
            None => {
                for (k, v) in &self.results {
                    if !v.is_array() && !v.is_object() {
                        println!("{k} = {v}");
                    }
                }
            }
        }
        for (name, ok) in &self.assertions {
            if !ok {
                eprintln!("assertion failed: {name}");
            }
        }
        Ok(passed)
    }
}
