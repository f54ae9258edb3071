//! The JSON run report and the volatile-field stripping used by
//! `--compare`.

use serde::{Deserialize, Serialize};
use srlab_core::report::CheckReport;
use std::collections::BTreeMap;

/// Version of the report layout, bumped on breaking shape changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Host fingerprint recorded with every run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Environment {
    /// CLI package version.
    pub package_version: String,
    /// Operating system family.
    pub os: String,
    /// CPU architecture.
    pub arch: String,
    /// Rayon thread-pool size used for the run.
    pub threads: usize,
}

impl Environment {
    /// Capture the current host.
    pub fn capture(threads: usize) -> Self {
        Self {
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            threads,
        }
    }
}

/// Full result of one scenario run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    /// Report layout version.
    pub schema_version: u32,
    /// Scenario name.
    pub scenario: String,
    /// Model identifier with parameter, e.g. `chf(1)`.
    pub model: String,
    /// Domain identifier with parameter.
    pub domain: String,
    /// Base seed actually used.
    pub seed: u64,
    /// Conjunction of all check outcomes.
    pub pass: bool,
    /// Per-check records, in execution order.
    pub checks: Vec<CheckReport>,
    /// Host fingerprint (excluded from `--compare`).
    pub environment: Environment,
    /// Wall time per check in milliseconds (excluded from `--compare`).
    pub wall_time_ms: BTreeMap<String, u64>,
    /// Unix timestamp in milliseconds (excluded from `--compare`).
    pub generated_at_unix_ms: u64,
}

/// Keys that legitimately vary between byte-identical reruns.
pub const VOLATILE_KEYS: [&str; 3] = ["environment", "wall_time_ms", "generated_at_unix_ms"];

/// Drop the volatile top-level keys so two runs of the same scenario with
/// the same seed compare byte-for-byte.
pub fn strip_volatile(value: &mut serde_json::Value) {
    if let Some(map) = value.as_object_mut() {
        for key in VOLATILE_KEYS {
            map.remove(key);
        }
    }
}
