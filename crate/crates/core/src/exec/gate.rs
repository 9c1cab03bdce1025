use serde::{Deserialize, Serialize};

/// Inputs to the departure success estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GateFeatures {
    /// Shortest-path length over the steps left in the episode.
    pub dist_ratio: f64,
    /// On-grid agents over the soft cap.
    pub density: f64,
    /// Conflict-graph degree among agents already on the grid.
    pub degree: f64,
    /// An agent with the same origin, target and direction left just before.
    pub following: bool,
}

/// Estimates the probability that a train departing now reaches its target.
pub trait SuccessPredictor: Send + Sync {
    fn predict(&self, f: &GateFeatures) -> f64;
}

/// Fixed-coefficient logistic model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticPredictor {
    pub bias: f64,
    pub dist_ratio: f64,
    pub density: f64,
    pub degree: f64,
    pub follow_bonus: f64,
}

impl Default for LogisticPredictor {
    fn default() -> Self {
        LogisticPredictor { bias: 4.0, dist_ratio: -3.0, density: -4.0, degree: -0.5, follow_bonus: 1.0 }
    }
}

impl SuccessPredictor for LogisticPredictor {
    fn predict(&self, f: &GateFeatures) -> f64 {
        let z = self.bias
            + self.dist_ratio * f.dist_ratio
            + self.density * f.density
            + self.degree * f.degree
            + if f.following { self.follow_bonus } else { 0.0 };
        1.0 / (1.0 + (-z).exp())
    }
}

/// Threshold decays linearly from `start` to `end` over `decay_steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u32,
}

impl ThresholdSchedule {
    pub fn for_t_max(t_max: u32) -> Self {
        ThresholdSchedule { start: 0.92, end: 0.5, decay_steps: (t_max / 2).max(1) }
    }

    pub fn constant(v: f64) -> Self {
        ThresholdSchedule { start: v, end: v, decay_steps: 1 }
    }

    pub fn at(&self, t: u32) -> f64 {
        let x = (t as f64 / self.decay_steps.max(1) as f64).min(1.0);
        (self.start + (self.end - self.start) * x).clamp(0.0, 1.0)
    }
}

/// Default cap on concurrent on-grid agents.
pub fn default_soft_cap(width: u32, height: u32) -> usize {
    4.max(((width + height) / 4) as usize)
}

/// One agent asking to depart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateCandidate {
    pub agent: usize,
    pub features: GateFeatures,
    /// Not first in line among agents with the same origin, target and
    /// direction; such agents wait for the ones ahead of them.
    pub queued: bool,
}

pub struct DepartureGate {
    pub predictor: Box<dyn SuccessPredictor>,
    pub schedule: ThresholdSchedule,
    pub soft_cap: usize,
}

impl std::fmt::Debug for DepartureGate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DepartureGate").field("schedule", &self.schedule).field("soft_cap", &self.soft_cap).finish()
    }
}

impl DepartureGate {
    pub fn new(width: u32, height: u32, t_max: u32) -> Self {
        DepartureGate {
            predictor: Box::new(LogisticPredictor::default()),
            schedule: ThresholdSchedule::for_t_max(t_max),
            soft_cap: default_soft_cap(width, height),
        }
    }

    pub fn threshold(&self, t: u32) -> f64 {
        self.schedule.at(t)
    }

    /// Agents allowed to depart at `t`. The cap is checked against the
    /// on-grid count at the start of the step, so several agents may be
    /// released together and the cap can be exceeded by one step's worth.
    pub fn allowed(&self, candidates: &[GateCandidate], on_grid: usize, t: u32) -> Vec<usize> {
        if on_grid >= self.soft_cap {
            return Vec::new();
        }
        let thr = self.threshold(t);
        candidates
            .iter()
            .filter(|c| !c.queued && self.predictor.predict(&c.features) > thr)
            .map(|c| c.agent)
            .collect()
    }
}
