use serde::{Deserialize, Serialize};
use std::ops::Range;
use std::path::Path;

/// Time and resource limits of an evaluation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    /// Initial planning time per environment.
    pub planning_secs: f64,
    pub step_secs: f64,
    /// Whole-run budget. Planning time counts against it.
    pub budget_secs: f64,
    pub workers: usize,
    /// Informational only; not enforced.
    pub memory_gb: f64,
    /// When false, deadlines are ignored (timeouts never fire).
    pub enforce: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { planning_secs: 600.0, step_secs: 10.0, budget_secs: 8.0 * 3600.0, workers: 4, memory_gb: 15.0, enforce: true }
    }
}

impl Limits {
    pub fn competition() -> Self {
        Self::default()
    }

    /// Scaled-down limits for a laptop run.
    pub fn desk() -> Self {
        Limits { planning_secs: 10.0, step_secs: 0.1, budget_secs: 1800.0, ..Self::default() }
    }

    /// Tests evaluated by the desk profile.
    pub const DESK_TESTS: Range<u32> = 0..8;

    pub fn unlimited() -> Self {
        Limits { enforce: false, ..Self::desk() }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("planning_secs", self.planning_secs), ("step_secs", self.step_secs), ("budget_secs", self.budget_secs)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.workers == 0 {
            return Err("workers must be positive".into());
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let limits: Limits = serde_json::from_str(&text)?;
        limits.validate().map_err(anyhow::Error::msg)?;
        Ok(limits)
    }
}

/// Seeds from a file: a single base seed or an explicit list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Base(u64),
    List(Vec<u64>),
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Base(0)
    }
}

impl SeedSpec {
    /// Seed of environment `env` of test `test`. A list is used in order
    /// and wraps around.
    pub fn seed(&self, test: u32, env: u32) -> u64 {
        let slot = test as u64 * crate::gen::ENVS_PER_TEST as u64 + env as u64;
        match self {
            SeedSpec::Base(b) => b.wrapping_mul(1_000_003).wrapping_add(slot),
            SeedSpec::List(v) if v.is_empty() => slot,
            SeedSpec::List(v) => v[(slot % v.len() as u64) as usize],
        }
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
