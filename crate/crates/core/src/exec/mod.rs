//! Execution-time control: ordering enforcement over a plan, partial
//! replanning after breakdowns, conflict-graph priorities, junction traffic
//! lights and departure gating.

mod conflict;
mod controller;
mod gate;
mod heuristic;
mod lights;
mod lines;
mod mcp;
mod replan;

pub use conflict::{assign_priorities, build_conflict_graph, ConflictGraph, Intent, PriorityAssignment, CONFLICT_WINDOW};
pub use controller::{Controller, PlannedConfig, PlannedController, Planner};
pub use gate::{
    default_soft_cap, DepartureGate, GateCandidate, GateFeatures, LogisticPredictor, SuccessPredictor, ThresholdSchedule,
};
pub use heuristic::{HeuristicController, RouteChooser};
pub use lights::{ClusterLight, TrafficLights};
pub use lines::{is_choice, line_from, HeadOnGuard, Link};
pub use mcp::{McpExecutor, Progress, Visit, VisitOrder};
pub use replan::{affected_agents, partial_replan, plan_deferred, ReplanReport};
