//! Episode traces and their JSON-lines encoding.
//!
//! A trace file is one JSON object per line. The first line is the header
//! (`"type":"header"`), followed by one `"type":"step"` record per timestep
//! and, for completed episodes, a closing `"type":"summary"` record. The
//! header carries the full environment so a trace is self-contained.

use super::types::{Action, Environment};
use crate::rail::State;
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};

pub const TRACE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: u32,
    pub seed: u64,
    pub t_max: u32,
    pub env: Environment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalfunctionEvent {
    pub agent: usize,
    pub duration: u32,
    /// Set by an explicit injection rather than the random draw.
    #[serde(default)]
    pub injected: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u32,
    pub actions: Vec<Action>,
    pub granted: Vec<bool>,
    pub positions: Vec<Option<State>>,
    pub malfunctions: Vec<MalfunctionEvent>,
    /// Agents newly flagged as deadlocked this step.
    pub deadlocks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub steps: u32,
    pub rewards: Vec<i64>,
    pub arrivals: Vec<Option<u32>>,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TraceRecord {
    Header(TraceHeader),
    Step(StepRecord),
    Summary(TraceSummary),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
    pub summary: Option<TraceSummary>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("trace is missing its header")]
    MissingHeader,
    #[error("line {0}: unexpected record")]
    Unexpected(usize),
    #[error("unsupported trace version {0}")]
    Version(u32),
}

impl EpisodeTrace {
    pub fn n_agents(&self) -> usize {
        self.header.env.agents.len()
    }

    /// Normalized score from the per-agent rewards in the summary, or from
    /// the step count when the summary is absent (nobody finished).
    pub fn score(&self) -> f64 {
        match &self.summary {
            Some(s) => episode_score(&s.rewards, self.header.t_max),
            None => 0.0,
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), TraceError> {
        let line = |w: &mut W, r: &TraceRecord| -> Result<(), TraceError> {
            serde_json::to_writer(&mut *w, r).map_err(|e| TraceError::Json { line: 0, source: e })?;
            w.write_all(b"\n")?;
            Ok(())
        };
        line(&mut w, &TraceRecord::Header(self.header.clone()))?;
        for s in &self.steps {
            line(&mut w, &TraceRecord::Step(s.clone()))?;
        }
        if let Some(s) = &self.summary {
            line(&mut w, &TraceRecord::Summary(s.clone()))?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<EpisodeTrace, TraceError> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut summary = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TraceRecord =
                serde_json::from_str(&line).map_err(|e| TraceError::Json { line: i + 1, source: e })?;
            match rec {
                TraceRecord::Header(h) if header.is_none() => {
                    if h.version != TRACE_VERSION {
                        return Err(TraceError::Version(h.version));
                    }
                    header = Some(h)
                }
                TraceRecord::Step(s) if header.is_some() && summary.is_none() => steps.push(s),
                TraceRecord::Summary(s) if header.is_some() && summary.is_none() => summary = Some(s),
                _ => return Err(TraceError::Unexpected(i + 1)),
            }
        }
        Ok(EpisodeTrace { header: header.ok_or(TraceError::MissingHeader)?, steps, summary })
    }
}

/// Normalized episode score `1 + sum(rewards) / (n * t_max)`.
pub fn episode_score(rewards: &[i64], t_max: u32) -> f64 {
    if rewards.is_empty() || t_max == 0 {
        return 0.0;
    }
    let total: i64 = rewards.iter().sum();
    1.0 + total as f64 / (rewards.len() as f64 * t_max as f64)
}
