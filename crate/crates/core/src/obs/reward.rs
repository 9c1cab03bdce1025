use crate::sim::{AgentState, Phase, Simulation};
use crate::solver::PlanningContext;
use serde::{Deserialize, Serialize};

/// Coefficients of the shaped reward
/// `progress * Δd - deadlock * deadlocked + finish * finished
///  - step * (not finished) - stop * (held position)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapedRewardConfig {
    pub progress: f64,
    pub deadlock_penalty: f64,
    pub finish_bonus: f64,
    pub step_penalty: f64,
    pub stop_penalty: f64,
}

impl Default for ShapedRewardConfig {
    fn default() -> Self {
        ShapedRewardConfig { progress: 0.01, deadlock_penalty: 5.0, finish_bonus: 10.0, step_penalty: 0.0, stop_penalty: 0.0 }
    }
}

impl ShapedRewardConfig {
    /// Distance-progress shaping.
    pub fn progress_shaping() -> Self {
        Self::default()
    }

    /// Only finishing is rewarded; time, stops and deadlocks cost.
    pub fn finish_only(step_penalty: f64, stop_penalty: f64, deadlock_penalty: f64, finish_bonus: f64) -> Self {
        ShapedRewardConfig { progress: 0.0, deadlock_penalty, finish_bonus, step_penalty, stop_penalty }
    }

    pub fn is_finite(&self) -> bool {
        [self.progress, self.deadlock_penalty, self.finish_bonus, self.step_penalty, self.stop_penalty]
            .iter()
            .all(|x| x.is_finite())
    }
}

/// Steps to the target from an agent's situation; 0 once done, origin
/// distance plus the entry step before departure.
pub fn agent_distance(ctx: &PlanningContext, agent: usize, a: &AgentState) -> Option<u32> {
    let dist = ctx.dist(agent);
    match a.phase {
        Phase::Done => Some(0),
        Phase::OnGrid => dist.get(a.position?),
        Phase::OffGrid => dist.from_start(ctx.agent(agent).start_state()),
    }
}

/// Shaped reward of `agent` for the transition `prev -> next`. If either
/// distance is unreachable the progress term is 0.
pub fn shaped_reward(ctx: &PlanningContext, prev: &Simulation, next: &Simulation, agent: usize, cfg: &ShapedRewardConfig) -> f64 {
    let (a, b) = (prev.agent(agent), next.agent(agent));
    let delta = match (agent_distance(ctx, agent, a), agent_distance(ctx, agent, b)) {
        (Some(x), Some(y)) => x as f64 - y as f64,
        _ => 0.0,
    };
    let finished = b.is_done() && !a.is_done();
    shaped_terms(delta, b.deadlocked, finished, !b.is_done(), b.phase == Phase::OnGrid && a.position == b.position, cfg)
}

/// The formula on raw inputs.
pub fn shaped_terms(delta: f64, deadlocked: bool, finished: bool, active: bool, held: bool, cfg: &ShapedRewardConfig) -> f64 {
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    cfg.progress * delta - cfg.deadlock_penalty * flag(deadlocked) + cfg.finish_bonus * flag(finished)
        - cfg.step_penalty * flag(active)
        - cfg.stop_penalty * flag(held)
}
