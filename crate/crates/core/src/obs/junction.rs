use crate::error::ObsError;
use crate::rail::{classify_cells, cluster_index, find_clusters, CellClass, CellClassMap, Cluster, Direction, RailGrid, State};
use crate::sim::{Phase, Simulation};
use crate::solver::PlanningContext;
use serde::{Deserialize, Serialize};

pub const JUNCTION_SLOTS: usize = 3;
pub const JUNCTION_FEATURES: usize = 9;

/// Features per choice (left, forward, right):
///
/// 0. a route to the target exists through this choice
/// 1. shortest route length from the successor state
/// 2. agents inside the next junction cluster
/// 3. opposing agents on the shortest route
/// 4. deadlocked agents on the shortest route
/// 5. agents on junction cells of the shortest route
/// 6. agents waiting at the next cluster's entry cells
/// 7. steps to the next junction cell
/// 8. first stopping cell on the route is occupied
///
/// Choices the track does not offer hold -1, with distances unreachable.
/// Unreachable distances are `f64::INFINITY` (serialized as `null`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionObservation {
    pub slots: [[f64; JUNCTION_FEATURES]; JUNCTION_SLOTS],
}

impl JunctionObservation {
    pub fn flatten(&self) -> Vec<f64> {
        self.slots.iter().flatten().copied().collect()
    }
}

const INFEASIBLE: [f64; JUNCTION_FEATURES] = [-1.0, f64::INFINITY, -1.0, -1.0, -1.0, -1.0, -1.0, f64::INFINITY, -1.0];

/// Static grid analysis reused across queries.
#[derive(Clone, Debug)]
pub struct JunctionObserver {
    classes: CellClassMap,
    clusters: Vec<Cluster>,
    index: Vec<Option<usize>>,
}

impl JunctionObserver {
    pub fn new(grid: &RailGrid) -> Self {
        let clusters = find_clusters(grid);
        let index = cluster_index(grid, &clusters);
        JunctionObserver { classes: classify_cells(grid), clusters, index }
    }

    pub fn classes(&self) -> &CellClassMap {
        &self.classes
    }

    /// Position the agent decides from: its cell, or its origin before departure.
    fn decision_state(&self, ctx: &PlanningContext, sim: &Simulation, agent: usize) -> Result<State, ObsError> {
        let a = sim.agent(agent);
        let s = match a.phase {
            Phase::Done => return Err(ObsError::Finished(agent)),
            Phase::OnGrid => a.position.expect("on grid"),
            Phase::OffGrid => ctx.agent(agent).start_state(),
        };
        match self.classes.get(s.cell) {
            CellClass::Stopping | CellClass::Decision => Ok(s),
            _ => Err(ObsError::Masked { agent, cell: s.cell }),
        }
    }

    pub fn observe(&self, ctx: &PlanningContext, sim: &Simulation, agent: usize) -> Result<JunctionObservation, ObsError> {
        let s = self.decision_state(ctx, sim, agent)?;
        let exits = ctx.grid().code(s.cell).exits(s.heading);
        let choices = if let Some(only) = exits.single() {
            [None, Some(only), None]
        } else {
            [s.heading.left(), s.heading, s.heading.right()].map(|d| exits.contains(d).then_some(d))
        };
        let mut slots = [INFEASIBLE; JUNCTION_SLOTS];
        for (k, choice) in choices.into_iter().enumerate() {
            if let Some(d) = choice {
                if let Some(row) = self.slot(ctx, sim, agent, s, d) {
                    slots[k] = row;
                }
            }
        }
        Ok(JunctionObservation { slots })
    }

    fn slot(&self, ctx: &PlanningContext, sim: &Simulation, agent: usize, s: State, d: Direction) -> Option<[f64; JUNCTION_FEATURES]> {
        let grid = ctx.grid();
        let next = State::new(grid.neighbor(s.cell, d)?, d);
        let dist = ctx.dist(agent);
        let len = dist.get(next);
        // route to follow: the shortest one, or the corridor ahead if there is none
        let route: Vec<State> = match dist.shortest_path(grid, next) {
            Some(p) => p,
            None => {
                let mut v = vec![next];
                let mut cur = next;
                while let Some(e) = grid.code(cur.cell).exits(cur.heading).single() {
                    match grid.neighbor(cur.cell, e) {
                        Some(n) if v.len() < grid.cell_count() => {
                            cur = State::new(n, e);
                            v.push(cur);
                        }
                        _ => break,
                    }
                }
                v
            }
        };
        let junction = |st: &State| grid.code(st.cell).transition_count() >= 3;
        let other = |c| sim.occupant(c).filter(|&j| j != agent);
        let mut opposing = 0.0;
        let mut crashed = 0.0;
        let mut on_junctions = 0.0;
        if len.is_some() {
            for st in &route {
                if let Some(j) = other(st.cell) {
                    let a = sim.agent(j);
                    if a.position.map(|p| p.heading) != Some(st.heading) {
                        opposing += 1.0;
                    }
                    if a.deadlocked {
                        crashed += 1.0;
                    }
                    if junction(st) {
                        on_junctions += 1.0;
                    }
                }
            }
        }
        let first_junction = route.iter().position(junction);
        let (inside, queuing) = match first_junction.and_then(|p| self.index[grid.index(route[p].cell)]) {
            Some(k) => {
                let cl = &self.clusters[k];
                let inside = cl.cells.iter().filter(|&&c| other(c).is_some()).count();
                let queuing = cl.entries.iter().filter(|&&c| other(c).is_some()).count();
                (inside as f64, queuing as f64)
            }
            None => (0.0, 0.0),
        };
        let stop_occupied = route
            .iter()
            .find(|st| self.classes.get(st.cell) == CellClass::Stopping)
            .map_or(0.0, |st| if other(st.cell).is_some() { 1.0 } else { 0.0 });
        Some([
            if len.is_some() { 1.0 } else { 0.0 },
            len.map_or(f64::INFINITY, f64::from),
            inside,
            opposing,
            crashed,
            on_junctions,
            queuing,
            first_junction.map_or(f64::INFINITY, |p| p as f64 + 1.0),
            stop_occupied,
        ])
    }
}

/// One-off junction observation; see [`JunctionObserver`] for repeated use.
pub fn junction_observe(ctx: &PlanningContext, sim: &Simulation, agent: usize) -> Result<JunctionObservation, ObsError> {
    JunctionObserver::new(ctx.grid()).observe(ctx, sim, agent)
}
