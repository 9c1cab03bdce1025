use super::trace::{episode_score, EpisodeTrace, MalfunctionEvent, StepRecord, TraceHeader, TraceSummary, TRACE_VERSION};
use super::types::{exit_for_action, Action, AgentState, Environment, Phase};
use crate::error::SimError;
use crate::rail::{classify_cells, Cell, CellClass, RailGrid, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::Arc;

/// Result of one [`Simulation::step`].
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub t: u32,
    pub rewards: Vec<i64>,
    pub done: Vec<bool>,
    pub granted: Vec<bool>,
    pub malfunctions: Vec<MalfunctionEvent>,
    pub new_deadlocks: Vec<usize>,
    pub terminated: bool,
}

/// Deterministic episode state. Single owner; clone to branch.
#[derive(Clone, Debug)]
pub struct Simulation {
    env: Arc<Environment>,
    seed: u64,
    rng: ChaCha8Rng,
    t: u32,
    t_max: u32,
    agents: Vec<AgentState>,
    occupancy: Vec<Option<usize>>,
    pending: Vec<(usize, u32)>,
    terminated: bool,
    record: bool,
    trace: Vec<StepRecord>,
}

fn reachable(grid: &RailGrid, from: State, target: Cell) -> bool {
    let mut seen = HashSet::from([from]);
    let mut q = VecDeque::from([from]);
    while let Some(s) = q.pop_front() {
        if s.cell == target {
            return true;
        }
        for n in grid.successors(s) {
            if grid.is_state(n) && seen.insert(n) {
                q.push_back(n);
            }
        }
    }
    false
}

/// Checks every agent against the grid; returns the first offending index.
pub fn validate_agents(env: &Environment) -> Result<(), SimError> {
    let classes = classify_cells(&env.grid);
    for (index, a) in env.agents.iter().enumerate() {
        let bad = |reason: &str| Err(SimError::InvalidAgent { index, reason: reason.to_string() });
        if !env.grid.contains(a.origin) || !env.grid.contains(a.target) {
            return bad("origin or target outside the grid");
        }
        if a.origin == a.target {
            return bad("origin equals target");
        }
        for (what, cell) in [("origin", a.origin), ("target", a.target)] {
            match classes.get(cell) {
                CellClass::NonRail => return bad(&format!("{what} is not a rail cell")),
                CellClass::Decision => return bad(&format!("{what} is a switch")),
                _ => {}
            }
        }
        if !env.grid.is_state(a.start_state()) {
            return bad("initial direction not available at origin");
        }
        if !reachable(&env.grid, a.start_state(), a.target) {
            return bad("target unreachable from origin and direction");
        }
    }
    Ok(())
}

impl Simulation {
    pub fn reset(env: Arc<Environment>, seed: u64) -> Result<Simulation, SimError> {
        env.malfunction.validate()?;
        validate_agents(&env)?;
        let n = env.agents.len();
        let t_max = env.t_max();
        let cells = env.grid.cell_count();
        Ok(Simulation {
            env,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            t: 0,
            t_max,
            agents: vec![AgentState::fresh(); n],
            occupancy: vec![None; cells],
            pending: Vec::new(),
            terminated: false,
            record: true,
            trace: Vec::new(),
        })
    }

    /// Disables per-step trace recording (planning look-ahead copies).
    pub fn without_recording(mut self) -> Self {
        self.record = false;
        self.trace.clear();
        self
    }

    /// Look-ahead copy: no recording, no further random breakdowns, and a
    /// step limit of `limit` instead of the episode's.
    pub fn projection(&self, limit: u32) -> Simulation {
        let mut s = self.clone().without_recording();
        s.disable_malfunctions();
        s.t_max = limit.max(s.t);
        s.terminated = s.all_done() || s.t >= s.t_max;
        s
    }

    /// Overrides the episode step limit (long-horizon stress runs).
    pub fn set_step_limit(&mut self, limit: u32) {
        self.t_max = limit.max(self.t);
        self.terminated = self.all_done() || self.t >= self.t_max;
    }

    pub fn env(&self) -> &Arc<Environment> {
        &self.env
    }

    pub fn grid(&self) -> &RailGrid {
        &self.env.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn t_max(&self) -> u32 {
        self.t_max
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> &AgentState {
        &self.agents[i]
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn occupant(&self, cell: Cell) -> Option<usize> {
        if self.env.grid.contains(cell) {
            self.occupancy[self.env.grid.index(cell)]
        } else {
            None
        }
    }

    pub fn on_grid_count(&self) -> usize {
        self.agents.iter().filter(|a| a.phase == Phase::OnGrid).count()
    }

    pub fn all_done(&self) -> bool {
        self.agents.iter().all(|a| a.is_done())
    }

    pub fn deadlocked(&self) -> BTreeSet<usize> {
        (0..self.agents.len()).filter(|&i| self.agents[i].deadlocked).collect()
    }

    /// Forces a breakdown of `duration` steps starting with the next step.
    pub fn inject_malfunction(&mut self, agent: usize, duration: u32) {
        self.pending.push((agent, duration));
    }

    /// Removes all future random breakdowns (current ones still run out).
    pub fn disable_malfunctions(&mut self) {
        if self.env.malfunction.rate > 0.0 {
            let mut env = (*self.env).clone();
            env.malfunction.rate = 0.0;
            self.env = Arc::new(env);
        }
    }

    pub fn score(&self) -> f64 {
        let rewards: Vec<i64> = self.agents.iter().map(|a| a.reward).collect();
        episode_score(&rewards, self.t_max)
    }

    fn intended_exit(&self, i: usize, action: Action) -> Option<State> {
        let a = &self.agents[i];
        let s = a.position?;
        let exits = self.env.grid.code(s.cell).exits(s.heading);
        let exit = match action {
            Action::Stop => None,
            Action::DoNothing => {
                if a.moving {
                    exit_for_action(exits, s.heading, Action::MoveForward)
                } else {
                    None
                }
            }
            m => exit_for_action(exits, s.heading, m).or_else(|| {
                // invalid action degrades to a no-op
                if a.moving {
                    exit_for_action(exits, s.heading, Action::MoveForward)
                } else {
                    None
                }
            }),
        }?;
        self.env.grid.neighbor(s.cell, exit).map(|c| State::new(c, exit))
    }

    fn sample_malfunctions(&mut self) -> Vec<MalfunctionEvent> {
        let mut events = Vec::new();
        for (agent, duration) in std::mem::take(&mut self.pending) {
            if agent < self.agents.len() && !self.agents[agent].is_done() && duration > 0 {
                let a = &mut self.agents[agent];
                a.malfunction_remaining = a.malfunction_remaining.max(duration);
                events.push(MalfunctionEvent { agent, duration, injected: true });
            }
        }
        let p = self.env.malfunction;
        if p.rate > 0.0 {
            for agent in 0..self.agents.len() {
                let a = &self.agents[agent];
                if a.is_done() || a.malfunction_remaining > 0 {
                    continue;
                }
                if self.rng.gen_bool(p.rate) {
                    let duration = self.rng.gen_range(p.min_duration..=p.max_duration);
                    self.agents[agent].malfunction_remaining = duration;
                    events.push(MalfunctionEvent { agent, duration, injected: false });
                }
            }
        }
        events
    }

    /// Advances one timestep. `actions` has one entry per agent; missing
    /// trailing entries are treated as no-ops.
    pub fn step(&mut self, actions: &[Action]) -> Result<StepOutcome, SimError> {
        if self.terminated {
            return Err(SimError::Terminated(self.t));
        }
        let n = self.agents.len();
        if actions.len() > n {
            return Err(SimError::ActionCount { expected: n, got: actions.len() });
        }
        let action = |i: usize| actions.get(i).copied().unwrap_or_default();
        self.t += 1;
        let malfunctions = self.sample_malfunctions();
        let frozen: Vec<bool> = self.agents.iter().map(|a| a.malfunction_remaining > 0).collect();
        let was_done: Vec<bool> = self.agents.iter().map(|a| a.is_done()).collect();

        // phase 1: intended target states
        let mut intent: Vec<Option<State>> = vec![None; n];
        for i in 0..n {
            if frozen[i] {
                continue;
            }
            let act = action(i);
            match self.agents[i].phase {
                Phase::Done => {}
                Phase::OffGrid => {
                    if act.is_move() {
                        intent[i] = Some(self.env.agents[i].start_state());
                    }
                }
                Phase::OnGrid => {
                    intent[i] = self.intended_exit(i, act);
                    match act {
                        Action::Stop => self.agents[i].moving = false,
                        m if m.is_move() && intent[i].is_some() => self.agents[i].moving = true,
                        _ => {}
                    }
                }
            }
        }

        // phase 2: contention per target cell, lowest id wins
        let grid = &self.env.grid;
        let mut claimant: Vec<Option<usize>> = vec![None; grid.cell_count()];
        for i in 0..n {
            if let Some(s) = intent[i] {
                let k = grid.index(s.cell);
                if claimant[k].is_none() {
                    claimant[k] = Some(i);
                } else {
                    intent[i] = None;
                }
            }
        }
        // resolve chains: 0 = unknown, 1 = visiting, 2 = granted, 3 = denied
        let mut mark = vec![0u8; n];
        for start in 0..n {
            if intent[start].is_none() || mark[start] != 0 {
                continue;
            }
            let mut chain = Vec::new();
            let mut cur = start;
            let verdict = loop {
                if mark[cur] == 2 {
                    break true;
                }
                if mark[cur] == 3 {
                    break false;
                }
                if mark[cur] == 1 {
                    // closed a cycle: rotations of 3+ agents move, swaps do not
                    let pos = chain.iter().position(|&x| x == cur).expect("on chain");
                    let cycle_len = chain.len() - pos;
                    let ok = cycle_len >= 3;
                    for &x in &chain[pos..] {
                        mark[x] = if ok { 2 } else { 3 };
                    }
                    chain.truncate(pos);
                    break ok;
                }
                mark[cur] = 1;
                chain.push(cur);
                let target = intent[cur].expect("has intent").cell;
                match self.occupancy[grid.index(target)] {
                    None => break true,
                    Some(occ) if intent[occ].is_some() => cur = occ,
                    Some(_) => break false,
                }
            };
            for x in chain {
                mark[x] = if verdict { 2 } else { 3 };
            }
        }
        let granted: Vec<bool> = (0..n).map(|i| mark[i] == 2).collect();

        // apply moves
        for i in 0..n {
            if granted[i] {
                if let Some(c) = self.agents[i].cell() {
                    let k = grid.index(c);
                    if self.occupancy[k] == Some(i) {
                        self.occupancy[k] = None;
                    }
                }
            }
        }
        for i in 0..n {
            if !granted[i] {
                continue;
            }
            let s = intent[i].expect("granted implies intent");
            let a = &mut self.agents[i];
            if a.phase == Phase::OffGrid {
                a.moving = true;
            }
            if s.cell == self.env.agents[i].target {
                a.phase = Phase::Done;
                a.position = None;
                a.moving = false;
                a.arrived_at = Some(self.t);
            } else {
                a.phase = Phase::OnGrid;
                a.position = Some(s);
                self.occupancy[grid.index(s.cell)] = Some(i);
            }
        }

        for (i, a) in self.agents.iter_mut().enumerate() {
            if frozen[i] {
                a.malfunction_remaining -= 1;
            }
        }

        let mut rewards = vec![0i64; n];
        for i in 0..n {
            if !was_done[i] {
                rewards[i] = -1;
            }
        }
        let all_done = self.all_done();
        if all_done {
            for r in rewards.iter_mut() {
                *r += 1;
            }
        }
        for (a, r) in self.agents.iter_mut().zip(&rewards) {
            a.reward += r;
        }
        self.terminated = all_done || self.t >= self.t_max;

        let before = self.deadlocked();
        let now = detect_deadlocks(self);
        let new_deadlocks: Vec<usize> = now.difference(&before).copied().collect();
        for &i in &new_deadlocks {
            self.agents[i].deadlocked = true;
        }

        if self.record {
            self.trace.push(StepRecord {
                t: self.t,
                actions: (0..n).map(action).collect(),
                granted: granted.clone(),
                positions: self.agents.iter().map(|a| a.position).collect(),
                malfunctions: malfunctions.clone(),
                deadlocks: new_deadlocks.clone(),
            });
        }

        Ok(StepOutcome {
            t: self.t,
            rewards,
            done: self.agents.iter().map(|a| a.is_done()).collect(),
            granted,
            malfunctions,
            new_deadlocks,
            terminated: self.terminated,
        })
    }

    /// The recorded trace so far; the summary is present once terminated.
    pub fn trace(&self) -> EpisodeTrace {
        let summary = self.terminated.then(|| TraceSummary {
            steps: self.t,
            rewards: self.agents.iter().map(|a| a.reward).collect(),
            arrivals: self.agents.iter().map(|a| a.arrived_at).collect(),
            score: self.score(),
        });
        EpisodeTrace {
            header: TraceHeader {
                version: TRACE_VERSION,
                seed: self.seed,
                t_max: self.t_max,
                env: (*self.env).clone(),
            },
            steps: self.trace.clone(),
            summary,
        }
    }
}

/// Agents that can never move again: head-on pairs whose every exit leads
/// into the other's cell, closed under "every exit leads into a deadlocked
/// agent's cell". Includes agents already flagged.
pub fn detect_deadlocks(sim: &Simulation) -> BTreeSet<usize> {
    let grid = sim.grid();
    let agents = sim.agents();
    let next_cells = |i: usize| -> Vec<Cell> {
        let s = agents[i].position.expect("on grid");
        grid.successors(s).map(|n| n.cell).collect()
    };
    let mut dead: BTreeSet<usize> = sim.deadlocked();
    let on_grid: Vec<usize> = (0..agents.len()).filter(|&i| agents[i].phase == Phase::OnGrid).collect();
    for &i in &on_grid {
        if dead.contains(&i) {
            continue;
        }
        let ni = next_cells(i);
        if ni.is_empty() {
            continue;
        }
        let first = ni[0];
        if !ni.iter().all(|&c| c == first) {
            continue;
        }
        if let Some(j) = sim.occupant(first) {
            let nj = next_cells(j);
            let ci = agents[i].cell().expect("on grid");
            if !nj.is_empty() && nj.iter().all(|&c| c == ci) {
                dead.insert(i);
                dead.insert(j);
            }
        }
    }
    loop {
        let mut changed = false;
        for &i in &on_grid {
            if dead.contains(&i) {
                continue;
            }
            let ni = next_cells(i);
            if !ni.is_empty()
                && ni
                    .iter()
                    .all(|&c| sim.occupant(c).map(|j| dead.contains(&j)).unwrap_or(false))
            {
                dead.insert(i);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dead
}

/// Re-runs a trace's action stream (and injected breakdowns) from its seed.
pub fn replay(trace: &EpisodeTrace) -> Result<EpisodeTrace, SimError> {
    let mut sim = Simulation::reset(Arc::new(trace.header.env.clone()), trace.header.seed)?;
    for rec in &trace.steps {
        for m in rec.malfunctions.iter().filter(|m| m.injected) {
            sim.inject_malfunction(m.agent, m.duration);
        }
        sim.step(&rec.actions)?;
    }
    Ok(sim.trace())
}
