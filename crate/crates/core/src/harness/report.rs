use serde::{Deserialize, Serialize};

/// Outcome of one environment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvResult {
    pub test: u32,
    pub env: u32,
    pub seed: u64,
    pub n_agents: usize,
    pub agents_done: usize,
    /// Normalized score; 0 when timed out or crashed.
    pub score: f64,
    pub steps: u32,
    pub wall_secs: f64,
    pub timed_out: bool,
    pub crashed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secs_per_iteration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EnvResult {
    pub fn completion(&self) -> f64 {
        if self.n_agents == 0 {
            0.0
        } else {
            self.agents_done as f64 / self.n_agents as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StopReason {
    /// Ten environments in a row timed out.
    ConsecutiveTimeouts { count: usize },
    /// Fewer than a quarter of a finished test's agents arrived.
    LowCompletion { test: u32, fraction: f64 },
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Continue,
    Stop(StopReason),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub controller: String,
    pub envs: Vec<EnvResult>,
    /// Sum of the environment scores.
    pub total_score: f64,
    pub termination: Option<StopReason>,
    pub wall_secs: f64,
}

impl EvalReport {
    pub fn recompute_total(&mut self) {
        self.total_score = self.envs.iter().map(|e| e.score).sum();
    }

    /// Copy with all wall-clock fields zeroed, for comparing runs.
    pub fn without_timing(&self) -> EvalReport {
        let mut r = self.clone();
        r.wall_secs = 0.0;
        for e in &mut r.envs {
            e.wall_secs = 0.0;
            e.secs_per_iteration = None;
        }
        r
    }

    /// Mean score of each test's environments, in test order.
    pub fn test_means(&self) -> Vec<(u32, f64)> {
        let mut out: Vec<(u32, f64, usize)> = Vec::new();
        for e in &self.envs {
            match out.last_mut() {
                Some((t, s, n)) if *t == e.test => {
                    *s += e.score;
                    *n += 1;
                }
                _ => out.push((e.test, e.score, 1)),
            }
        }
        out.into_iter().map(|(t, s, n)| (t, s / n as f64)).collect()
    }
}

pub const MAX_CONSECUTIVE_TIMEOUTS: usize = 10;
pub const MIN_COMPLETION: f64 = 0.25;

/// Applies the stopping rules to the results so far. `test_complete`
/// marks that the last result closed its test; the completion rule is only
/// checked then, over that test's agents.
pub fn check_termination(history: &[EnvResult], test_complete: bool, budget_left_secs: f64) -> Verdict {
    if budget_left_secs <= 0.0 {
        return Verdict::Stop(StopReason::BudgetExhausted);
    }
    let streak = history.iter().rev().take_while(|e| e.timed_out).count();
    if streak >= MAX_CONSECUTIVE_TIMEOUTS {
        return Verdict::Stop(StopReason::ConsecutiveTimeouts { count: streak });
    }
    if test_complete {
        if let Some(last) = history.last() {
            let test = last.test;
            let (done, total) = history
                .iter()
                .filter(|e| e.test == test)
                .fold((0usize, 0usize), |(d, n), e| (d + e.agents_done, n + e.n_agents));
            let fraction = if total == 0 { 0.0 } else { done as f64 / total as f64 };
            if fraction < MIN_COMPLETION {
                return Verdict::Stop(StopReason::LowCompletion { test, fraction });
            }
        }
    }
    Verdict::Continue
}
