use crate::rail::{Cell, RailGrid, State};
use crate::sim::{action_between, Action, Environment};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// One agent's timed route. `states[i]` is held at time `departure + i`;
/// the last state lies in the target cell and is reached at `arrival`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedPath {
    pub agent: usize,
    pub departure: u32,
    pub arrival: u32,
    pub states: Vec<State>,
}

impl TimedPath {
    pub fn new(agent: usize, departure: u32, states: Vec<State>) -> Self {
        let arrival = departure + states.len() as u32 - 1;
        TimedPath { agent, departure, arrival, states }
    }

    pub fn timed_states(&self) -> impl Iterator<Item = (u32, State)> + '_ {
        self.states.iter().enumerate().map(move |(i, &s)| (self.departure + i as u32, s))
    }

    /// Position at time `t`, or `None` before departure or after arrival.
    pub fn state_at(&self, t: u32) -> Option<State> {
        if t < self.departure || t > self.arrival {
            None
        } else {
            Some(self.states[(t - self.departure) as usize])
        }
    }

    /// Action that produces the position at time `t` from the one at `t - 1`.
    /// `from_off_grid` marks paths whose first state is a grid entry.
    pub fn action_at(&self, grid: &RailGrid, t: u32, from_off_grid: bool) -> Action {
        if t == self.departure && from_off_grid {
            return Action::MoveForward;
        }
        match (t.checked_sub(1).and_then(|p| self.state_at(p)), self.state_at(t)) {
            (Some(a), Some(b)) if a == b => Action::Stop,
            (Some(a), Some(b)) => action_between(grid, a, b).unwrap_or(Action::Stop),
            (None, _) => Action::DoNothing,
            (Some(_), None) => Action::DoNothing,
        }
    }

    /// Cells in visiting order with consecutive repeats removed.
    pub fn cell_sequence(&self) -> Vec<Cell> {
        let mut out: Vec<Cell> = Vec::new();
        for s in &self.states {
            if out.last() != Some(&s.cell) {
                out.push(s.cell);
            }
        }
        out
    }
}

/// A (possibly partial) plan for every agent of an environment.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub paths: Vec<Option<TimedPath>>,
    pub failed: Vec<usize>,
}

impl Solution {
    pub fn empty(n: usize) -> Self {
        Solution { paths: vec![None; n], failed: Vec::new() }
    }

    /// Sum of arrival times over planned agents.
    pub fn cost(&self) -> u64 {
        self.paths.iter().flatten().map(|p| p.arrival as u64).sum()
    }

    pub fn planned(&self) -> usize {
        self.paths.iter().flatten().count()
    }

    /// Ordering key: fewer unplanned agents first, then lower cost.
    pub fn rank(&self) -> (usize, u64) {
        (self.paths.len() - self.planned(), self.cost())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("solution serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Conflict {
    Vertex { a: usize, b: usize, cell: Cell, t: u32 },
    Swap { a: usize, b: usize, t: u32 },
    Illegal { agent: usize, reason: String },
}

/// Independent validity check: legal moves from each agent's start to its
/// target, and no shared cells or swapped links between any two paths.
pub fn check_solution(env: &Environment, sol: &Solution) -> Vec<Conflict> {
    let mut out = Vec::new();
    let grid = &env.grid;
    let mut at: HashMap<(Cell, u32), usize> = HashMap::new();
    let mut moves: HashMap<(Cell, Cell, u32), usize> = HashMap::new();
    for (i, p) in sol.paths.iter().enumerate() {
        let Some(p) = p else { continue };
        let spec = &env.agents[i];
        let illegal = |reason: &str| Conflict::Illegal { agent: i, reason: reason.into() };
        if p.agent != i || p.states.is_empty() || p.arrival != p.departure + p.states.len() as u32 - 1 {
            out.push(illegal("malformed path"));
            continue;
        }
        if p.departure == 0 || p.states[0] != spec.start_state() {
            out.push(illegal("does not enter at the origin"));
        }
        if p.states.last().map(|s| s.cell) != Some(spec.target) {
            out.push(illegal("does not end at the target"));
        }
        if p.states[..p.states.len() - 1].iter().any(|s| s.cell == spec.target) {
            out.push(illegal("passes through the target"));
        }
        for w in p.states.windows(2) {
            if w[0] != w[1] && !grid.successors(w[0]).any(|n| n == w[1]) {
                out.push(illegal("teleports"));
                break;
            }
        }
        for (t, s) in p.timed_states() {
            if let Some(&j) = at.get(&(s.cell, t)) {
                out.push(Conflict::Vertex { a: j, b: i, cell: s.cell, t });
            } else {
                at.insert((s.cell, t), i);
            }
        }
        for (k, w) in p.states.windows(2).enumerate() {
            let t = p.departure + k as u32;
            if w[0].cell != w[1].cell {
                moves.insert((w[0].cell, w[1].cell, t), i);
            }
        }
    }
    for (&(a, b, t), &i) in &moves {
        if let Some(&j) = moves.get(&(b, a, t)) {
            if i < j {
                out.push(Conflict::Swap { a: i, b: j, t });
            }
        }
    }
    out
}
