use super::conflict::{assign_priorities, build_conflict_graph, ConflictGraph, Intent, PriorityAssignment, CONFLICT_WINDOW};
use super::controller::Controller;
use super::gate::{DepartureGate, GateCandidate, GateFeatures};
use super::lights::TrafficLights;
use super::lines::{is_choice, HeadOnGuard};
use crate::error::ExecError;
use crate::obs::{AgentPolicy, MaskedPolicy};
use crate::rail::{Cell, Direction, State};
use crate::sim::{action_for_exit, Action, Phase, Simulation};
use crate::solver::PlanningContext;
use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

/// Picks the exit with the shortest remaining distance, avoiding cells held
/// by oncoming trains when another route exists. Off the grid it enters
/// only when the departure gate allows it.
pub struct RouteChooser {
    ctx: Arc<PlanningContext>,
    pub may_depart: Vec<bool>,
}

impl RouteChooser {
    fn exit_for(&self, sim: &Simulation, agent: usize, s: State) -> Option<Direction> {
        let grid = self.ctx.grid();
        let dist = self.ctx.dist(agent);
        let mut options: Vec<(bool, u32, Direction)> = Vec::new();
        for d in grid.code(s.cell).exits(s.heading).iter() {
            let Some(n) = grid.neighbor(s.cell, d) else { continue };
            let Some(len) = dist.get(State::new(n, d)) else { continue };
            let oncoming = sim
                .occupant(n)
                .filter(|&j| j != agent)
                .and_then(|j| sim.agent(j).position)
                .is_some_and(|p| p.heading != d);
            options.push((oncoming, len, d));
        }
        options.sort_by_key(|&(o, len, d)| (o, len, d.index()));
        match options.first() {
            Some(&(false, _, d)) => Some(d),
            _ => None,
        }
    }
}

impl AgentPolicy for RouteChooser {
    fn decide(&mut self, sim: &Simulation, agent: usize) -> Action {
        let a = sim.agent(agent);
        if a.is_malfunctioning() {
            return Action::DoNothing;
        }
        match a.position {
            None => {
                let origin = self.ctx.agent(agent).origin;
                if self.may_depart[agent] && sim.occupant(origin).is_none() {
                    Action::MoveForward
                } else {
                    Action::DoNothing
                }
            }
            Some(s) => match self.exit_for(sim, agent, s) {
                Some(d) => action_for_exit(self.ctx.grid(), s, d).unwrap_or(Action::Stop),
                None => Action::Stop,
            },
        }
    }
}

/// Decentralized rules: plain track handled by masking, shortest-route
/// choices at junctions, one train per junction cluster, gated departures
/// and conflict-graph priorities when two trains want the same cell.
pub struct HeuristicController {
    ctx: Option<Arc<PlanningContext>>,
    policy: Option<MaskedPolicy<RouteChooser>>,
    lights: Option<TrafficLights>,
    gate: Option<DepartureGate>,
    graph: ConflictGraph,
    pub priorities: PriorityAssignment,
    pub use_lights: bool,
    pub use_head_on: bool,
}

impl Default for HeuristicController {
    fn default() -> Self {
        HeuristicController {
            ctx: None,
            policy: None,
            lights: None,
            gate: None,
            graph: ConflictGraph::default(),
            priorities: PriorityAssignment::default(),
            use_lights: true,
            use_head_on: true,
        }
    }
}

impl HeuristicController {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lights(&self) -> Option<&TrafficLights> {
        self.lights.as_ref()
    }

    fn gate_candidates(&self, ctx: &PlanningContext, sim: &Simulation, gate: &DepartureGate) -> Vec<GateCandidate> {
        let on_grid: Vec<usize> = (0..sim.n_agents()).filter(|&i| sim.agent(i).phase == Phase::OnGrid).collect();
        let left = sim.t_max().saturating_sub(sim.t()).max(1) as f64;
        // first waiting member of each (origin, target, direction) group
        let mut first: HashMap<(Cell, Cell, Direction), usize> = HashMap::new();
        let mut last_out: HashMap<(Cell, Cell, Direction), usize> = HashMap::new();
        for i in 0..sim.n_agents() {
            let sp = ctx.agent(i);
            let key = (sp.origin, sp.target, sp.direction);
            match sim.agent(i).phase {
                Phase::OffGrid => {
                    first.entry(key).or_insert(i);
                }
                _ => {
                    last_out.insert(key, i);
                }
            }
        }
        (0..sim.n_agents())
            .filter(|&i| sim.agent(i).phase == Phase::OffGrid && !sim.agent(i).is_malfunctioning())
            .map(|i| {
                let sp = ctx.agent(i);
                let key = (sp.origin, sp.target, sp.direction);
                let leader = last_out.get(&key).map(|&j| sim.agent(j));
                let leader_at_origin = leader.is_some_and(|a| a.cell() == Some(sp.origin));
                let following = leader.is_some_and(|a| a.phase == Phase::OnGrid);
                let features = GateFeatures {
                    dist_ratio: ctx.dist(i).from_start(sp.start_state()).map_or(f64::INFINITY, |d| d as f64 / left),
                    density: on_grid.len() as f64 / gate.soft_cap.max(1) as f64,
                    degree: on_grid.iter().filter(|&&j| self.graph.has_edge(i, j)).count() as f64,
                    following,
                };
                GateCandidate { agent: i, features, queued: first.get(&key) != Some(&i) || leader_at_origin }
            })
            .collect()
    }
}

impl HeuristicController {
    /// Trains about to start a new stretch of track try their exits in
    /// order of distance and wait if every one is opposed.
    fn guard_head_on(&self, ctx: &PlanningContext, sim: &Simulation, actions: &mut [Action]) {
        let grid = ctx.grid();
        let mut guard = HeadOnGuard::new(sim);
        let mut order: Vec<usize> = (0..sim.n_agents()).filter(|&i| actions[i].is_move()).collect();
        order.sort_by_key(|&i| (self.priorities.level(i), i));
        for i in order {
            let target = ctx.agent(i).target;
            let (from, options): (Option<State>, Vec<(State, Action)>) = match sim.agent(i).position {
                None => (None, vec![(ctx.agent(i).start_state(), actions[i])]),
                Some(s) if is_choice(grid, s) => {
                    let wanted = wanted_cell(sim, i, actions[i]);
                    let mut opts: Vec<(bool, u32, State, Action)> = grid
                        .code(s.cell)
                        .exits(s.heading)
                        .iter()
                        .filter_map(|d| {
                            let n = State::new(grid.neighbor(s.cell, d)?, d);
                            let len = ctx.dist(i).get(n)?;
                            Some((Some(n.cell) != wanted, len, n, action_for_exit(grid, s, d)?))
                        })
                        .collect();
                    opts.sort_by_key(|&(w, len, n, _)| (w, len, n.heading.index()));
                    (Some(s), opts.into_iter().map(|(_, _, n, a)| (n, a)).collect())
                }
                Some(_) => continue,
            };
            let pick = options.into_iter().find_map(|(n, a)| {
                let links = HeadOnGuard::stretch(grid, from, n, target);
                (!guard.opposed(i, &links)).then_some((links, a))
            });
            match pick {
                Some((links, a)) => {
                    guard.add(i, &links);
                    actions[i] = a;
                }
                None => actions[i] = hold(sim, i),
            }
        }
    }
}

fn wanted_cell(sim: &Simulation, agent: usize, action: Action) -> Option<Cell> {
    let a = sim.agent(agent);
    if !action.is_move() {
        return None;
    }
    match a.position {
        None => Some(sim.env().agents[agent].origin),
        Some(s) => {
            let exits = sim.grid().code(s.cell).exits(s.heading);
            let d = crate::sim::exit_for_action(exits, s.heading, action)?;
            sim.grid().neighbor(s.cell, d)
        }
    }
}

impl Controller for HeuristicController {
    fn name(&self) -> String {
        "masked-heuristic".into()
    }

    fn plan(&mut self, sim: &Simulation, _deadline: Instant) -> Result<(), ExecError> {
        let ctx = Arc::new(PlanningContext::new(sim.env().clone()));
        let grid = ctx.grid();
        let intents: Vec<Option<Intent>> = (0..ctx.n_agents())
            .map(|i| {
                let s = ctx.agent(i).start_state();
                ctx.dist(i).get(s).map(|_| Intent::shortest(grid, ctx.dist(i), s, 1))
            })
            .collect();
        self.graph = build_conflict_graph(&intents, CONFLICT_WINDOW);
        self.priorities = assign_priorities(&self.graph);
        let chooser = RouteChooser { ctx: ctx.clone(), may_depart: vec![false; ctx.n_agents()] };
        self.policy = Some(MaskedPolicy::new(grid, chooser));
        self.lights = self.use_lights.then(|| TrafficLights::new(grid));
        self.gate = Some(DepartureGate::new(grid.width(), grid.height(), sim.t_max()));
        self.ctx = Some(ctx);
        Ok(())
    }

    fn act(&mut self, sim: &Simulation, _deadline: Instant) -> Result<Vec<Action>, ExecError> {
        let (Some(ctx), Some(gate)) = (self.ctx.clone(), self.gate.as_ref()) else {
            return Err(ExecError::Controller("act before plan".into()));
        };
        let on_grid = sim.on_grid_count();
        let cands = self.gate_candidates(&ctx, sim, gate);
        let allowed = gate.allowed(&cands, on_grid, sim.t());
        let policy = self.policy.as_mut().expect("planned");
        policy.inner.may_depart.iter_mut().for_each(|x| *x = false);
        for i in allowed {
            policy.inner.may_depart[i] = true;
        }
        let mut actions = policy.act_all(sim);
        if self.use_head_on {
            self.guard_head_on(&ctx, sim, &mut actions);
        }
        let mut wants: Vec<Option<Cell>> = (0..sim.n_agents()).map(|i| wanted_cell(sim, i, actions[i])).collect();
        // one claimant per cell: highest priority, then lowest id
        let mut claim: HashMap<Cell, usize> = HashMap::new();
        for i in 0..sim.n_agents() {
            if let Some(c) = wants[i] {
                let better = |j: usize| (self.priorities.level(i), i) < (self.priorities.level(j), j);
                match claim.get(&c) {
                    Some(&j) if !better(j) => {}
                    _ => {
                        claim.insert(c, i);
                    }
                }
            }
        }
        for i in 0..sim.n_agents() {
            if let Some(c) = wants[i] {
                if claim[&c] != i {
                    wants[i] = None;
                    actions[i] = hold(sim, i);
                }
            }
        }
        if let Some(lights) = self.lights.as_mut() {
            let ok = lights.control(sim, &wants);
            for i in 0..sim.n_agents() {
                if wants[i].is_some() && !ok[i] {
                    actions[i] = hold(sim, i);
                }
            }
        }
        Ok(actions)
    }
}

fn hold(sim: &Simulation, agent: usize) -> Action {
    if sim.agent(agent).position.is_some() {
        Action::Stop
    } else {
        Action::DoNothing
    }
}
