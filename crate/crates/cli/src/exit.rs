//! Error classification into process exit codes.

use std::fmt;
use std::path::PathBuf;

use swarm_markers::Error as CoreError;

pub const OK: i32 = 0;
pub const INTERNAL: i32 = 1;
pub const CONFIG: i32 = 2;
pub const DATA: i32 = 3;
pub const MISSING: i32 = 4;

/// A required input or upstream artifact does not exist.
#[derive(Debug)]
pub struct MissingArtifact(pub PathBuf);

impl fmt::Display for MissingArtifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing artifact: {}", self.0.display())
    }
}

impl std::error::Error for MissingArtifact {}

/// Invalid flag values caught after argument parsing.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "usage error: {}", self.0)
    }
}

impl std::error::Error for Usage {}

pub fn code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<MissingArtifact>() {
            return MISSING;
        }
        if cause.is::<Usage>() {
            return CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Config { .. } | CoreError::Json(_) => CONFIG,
                CoreError::Window(_)
                | CoreError::Estimator(_)
                | CoreError::Schema(_)
                | CoreError::DegenerateModel(_)
                | CoreError::InsufficientData(_)
                | CoreError::Parse(_) => DATA,
                CoreError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => MISSING,
                CoreError::Io(_) => INTERNAL,
            };
        }
        if let Some(e) = cause.downcast_ref::<serde_json::Error>() {
            return if e.is_io() { INTERNAL } else { CONFIG };
        }
    }
    INTERNAL
}
