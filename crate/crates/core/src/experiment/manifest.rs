//! Run manifest: the only artifact that carries timestamps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Profile;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub cell: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub profile: Profile,
    pub code_version: String,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub rows_written: usize,
    pub failures: Vec<Failure>,
    /// Cell ids already written; skipped on resume.
    pub completed: Vec<String>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl Manifest {
    pub fn new(config_hash: &str, profile: Profile) -> Self {
        Self {
            config_hash: config_hash.to_string(),
            profile,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: now(),
            finished_at: None,
            rows_written: 0,
            failures: Vec::new(),
            completed: Vec::new(),
        }
    }

    /// Continues a previous run: failed cells are retried.
    pub fn resumed(mut self) -> Self {
        self.failures.clear();
        self.finished_at = None;
        self
    }

    pub fn finish(&mut self) {
        self.finished_at = Some(now());
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(self)? + "\n")?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }
}
