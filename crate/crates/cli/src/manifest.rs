//! Run manifests: what went in, what came out, and how long markers took.

use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use swarm_markers::windowing::{MatrixTiming, WindowPlan};

use crate::fsio::{atomic_write, sha256_hex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanTiming {
    pub window: usize,
    pub overlap: f64,
    /// Mean marker time per window, seconds.
    pub mean_time_s: f64,
    /// Summed marker time, seconds.
    pub total_time_s: f64,
    pub n_windows: usize,
}

impl PlanTiming {
    pub fn new(plan: &WindowPlan, timing: &MatrixTiming, n_windows: usize) -> Self {
        PlanTiming {
            window: plan.size(),
            overlap: plan.overlap(),
            mean_time_s: timing.per_window_secs,
            total_time_s: timing.total_secs,
            n_windows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub seeds: Vec<u64>,
    /// Set for single simulation runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reached_goal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_plan: Option<WindowPlan>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timing: Vec<PlanTiming>,
    /// Hash over the command and every input digest; embedded in reports.
    pub chain: String,
}

impl RunManifest {
    pub fn new(command: Vec<String>, inputs: Vec<FileDigest>) -> Self {
        let mut material = command.join("\u{1f}");
        for d in &inputs {
            material.push('\u{1e}');
            material.push_str(&d.sha256);
        }
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            chain: sha256_hex(material.as_bytes()),
            command,
            scenario: None,
            seeds: Vec::new(),
            reached_goal: None,
            window_plan: None,
            inputs,
            outputs: Vec::new(),
            timing: Vec::new(),
        }
    }

    /// Writes an output atomically and records its digest.
    pub fn emit(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        atomic_write(path, bytes)?;
        self.outputs.push(FileDigest::of(path, bytes));
        Ok(())
    }

    /// Like [`emit`](Self::emit) for a report, prefixed with the chain hash.
    pub fn emit_report(&mut self, path: &Path, body: &[u8]) -> Result<()> {
        let mut bytes = format!("# chain={}\n", self.chain).into_bytes();
        bytes.extend_from_slice(body);
        self.emit(path, &bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        atomic_write(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}
