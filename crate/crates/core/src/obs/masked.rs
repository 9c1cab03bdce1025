use crate::rail::{classify_cells, CellClass, CellClassMap, RailGrid};
use crate::sim::{Action, Phase, Simulation};

/// Chooses one agent's action.
pub trait AgentPolicy {
    fn decide(&mut self, sim: &Simulation, agent: usize) -> Action;
}

impl<F: FnMut(&Simulation, usize) -> Action> AgentPolicy for F {
    fn decide(&mut self, sim: &Simulation, agent: usize) -> Action {
        self(sim, agent)
    }
}

/// Handles plain track itself and only asks `inner` at stopping and
/// decision cells and before departure. On plain track the train moves on
/// if the next cell is free and stops otherwise.
#[derive(Clone, Debug)]
pub struct MaskedPolicy<P> {
    pub inner: P,
    classes: CellClassMap,
    /// How often `inner` was consulted.
    pub inner_calls: u64,
}

impl<P: AgentPolicy> MaskedPolicy<P> {
    pub fn new(grid: &RailGrid, inner: P) -> Self {
        MaskedPolicy { inner, classes: classify_cells(grid), inner_calls: 0 }
    }

    pub fn classes(&self) -> &CellClassMap {
        &self.classes
    }

    /// True if the agent's current cell needs a real decision.
    pub fn needs_decision(&self, sim: &Simulation, agent: usize) -> bool {
        let a = sim.agent(agent);
        match a.position {
            Some(s) => matches!(self.classes.get(s.cell), CellClass::Stopping | CellClass::Decision),
            None => a.phase == Phase::OffGrid,
        }
    }

    pub fn act(&mut self, sim: &Simulation, agent: usize) -> Action {
        let a = sim.agent(agent);
        if a.is_done() {
            return Action::DoNothing;
        }
        if self.needs_decision(sim, agent) {
            self.inner_calls += 1;
            return self.inner.decide(sim, agent);
        }
        let s = a.position.expect("on grid");
        let grid = sim.grid();
        let next = grid.code(s.cell).exits(s.heading).single().and_then(|d| grid.neighbor(s.cell, d));
        match next {
            Some(c) if sim.occupant(c).is_none() => Action::MoveForward,
            _ => Action::Stop,
        }
    }

    pub fn act_all(&mut self, sim: &Simulation) -> Vec<Action> {
        (0..sim.n_agents()).map(|i| self.act(sim, i)).collect()
    }
}
