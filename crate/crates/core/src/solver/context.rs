use crate::graph::{build_graph, DistanceCache, DistanceMap};
use crate::rail::{Cell, RailGrid};
use crate::sim::{AgentSpec, Environment};
use std::sync::Arc;

/// An environment plus per-agent distance maps, shared by all planners.
#[derive(Clone, Debug)]
pub struct PlanningContext {
    pub env: Arc<Environment>,
    dists: Vec<Arc<DistanceMap>>,
    horizon: u32,
}

impl PlanningContext {
    pub fn new(env: Arc<Environment>) -> Self {
        let graph = build_graph(&env.grid, false);
        let mut cache = DistanceCache::new();
        let dists = env.agents.iter().map(|a| cache.get(&graph, &env.grid, a.target)).collect();
        let horizon = 2 * env.t_max();
        PlanningContext { env, dists, horizon }
    }

    pub fn grid(&self) -> &RailGrid {
        &self.env.grid
    }

    pub fn n_agents(&self) -> usize {
        self.env.agents.len()
    }

    pub fn agent(&self, i: usize) -> &AgentSpec {
        &self.env.agents[i]
    }

    pub fn target(&self, i: usize) -> Cell {
        self.env.agents[i].target
    }

    pub fn dist(&self, i: usize) -> &DistanceMap {
        &self.dists[i]
    }

    /// Earliest possible arrival time from off the grid at t = 0.
    pub fn free_flow_arrival(&self, i: usize) -> Option<u32> {
        self.dists[i].from_start(self.env.agents[i].start_state())
    }

    /// Planning horizon, twice the episode limit.
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn with_horizon(mut self, horizon: u32) -> Self {
        self.horizon = horizon;
        self
    }
}
