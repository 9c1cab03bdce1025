//! Deterministic train simulator.
//!
//! One step: breakdowns are drawn, every agent's action is turned into an
//! intended next state, contention for a cell goes to the lowest index, and
//! moves into cells being vacated in the same step are resolved along the
//! dependency chain (rotations of three or more move, swaps do not). Agents
//! entering their target finish and leave the grid.

mod engine;
mod trace;
mod types;

pub use engine::{detect_deadlocks, replay, validate_agents, Simulation, StepOutcome};
pub use trace::{
    episode_score, EpisodeTrace, MalfunctionEvent, StepRecord, TraceError, TraceHeader, TraceRecord,
    TraceSummary, TRACE_VERSION,
};
pub use types::{
    action_between, action_for_exit, compute_t_max, exit_for_action, Action, AgentSpec, AgentState,
    EnvOrigin, Environment, MalfunctionParams, Phase,
};
