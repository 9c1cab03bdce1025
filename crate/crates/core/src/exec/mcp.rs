use crate::error::ExecError;
use crate::rail::{Cell, RailGrid, State};
use crate::sim::{action_between, Action, Phase, Simulation};
use crate::solver::TimedPath;
use std::collections::HashMap;

/// One planned stay in a cell: entry state and planned entry time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Visit {
    pub state: State,
    pub planned: u32,
    /// Position of this visit in its cell's queue.
    pub slot: usize,
}

/// Per-cell visiting order extracted from timed paths.
#[derive(Clone, Debug, Default)]
pub struct VisitOrder {
    visits: Vec<Vec<Visit>>,
    queues: HashMap<Cell, Vec<(usize, usize)>>,
}

impl VisitOrder {
    pub fn from_paths(paths: &[Option<TimedPath>]) -> Self {
        let mut visits: Vec<Vec<Visit>> = vec![Vec::new(); paths.len()];
        let mut raw: HashMap<Cell, Vec<(u32, usize, usize)>> = HashMap::new();
        for (i, p) in paths.iter().enumerate() {
            let Some(p) = p else { continue };
            for (t, s) in p.timed_states() {
                if visits[i].last().map(|v: &Visit| v.state.cell) != Some(s.cell) {
                    let v = visits[i].len();
                    visits[i].push(Visit { state: s, planned: t, slot: 0 });
                    raw.entry(s.cell).or_default().push((t, i, v));
                }
            }
        }
        let mut queues = HashMap::with_capacity(raw.len());
        for (cell, mut q) in raw {
            q.sort_unstable();
            for (slot, &(_, i, v)) in q.iter().enumerate() {
                visits[i][v].slot = slot;
            }
            queues.insert(cell, q.into_iter().map(|(_, i, v)| (i, v)).collect());
        }
        VisitOrder { visits, queues }
    }

    pub fn visits(&self, agent: usize) -> &[Visit] {
        &self.visits[agent]
    }

    pub fn queue(&self, cell: Cell) -> &[(usize, usize)] {
        self.queues.get(&cell).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn n_agents(&self) -> usize {
        self.visits.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Progress {
    /// Has a plan but has not entered the grid.
    Waiting,
    /// Occupying planned visit `v`.
    At(usize),
    Done,
    Unplanned,
}

/// Enforces the planned per-cell visiting order while executing. A train
/// moves into its next cell only when its planned time has come and every
/// train planned to pass through that cell earlier has left it (or is
/// leaving it in this very step).
#[derive(Clone, Debug)]
pub struct McpExecutor {
    order: VisitOrder,
    paths: Vec<Option<TimedPath>>,
    progress: Vec<Progress>,
}

impl McpExecutor {
    /// Paths must be timed from the simulation's current state: every
    /// on-grid agent's path starts at its current position.
    pub fn new(paths: Vec<Option<TimedPath>>, sim: &Simulation) -> Self {
        let order = VisitOrder::from_paths(&paths);
        let progress = (0..paths.len())
            .map(|i| match (&paths[i], sim.agent(i).phase) {
                (_, Phase::Done) => Progress::Done,
                (None, _) => Progress::Unplanned,
                (Some(_), Phase::OffGrid) => Progress::Waiting,
                (Some(_), Phase::OnGrid) => Progress::At(0),
            })
            .collect();
        McpExecutor { order, paths, progress }
    }

    pub fn paths(&self) -> &[Option<TimedPath>] {
        &self.paths
    }

    pub fn order(&self) -> &VisitOrder {
        &self.order
    }

    pub fn progress(&self, agent: usize) -> Progress {
        self.progress[agent]
    }

    /// Agents with a plan that have not finished.
    pub fn active(&self) -> usize {
        self.progress.iter().filter(|p| matches!(p, Progress::Waiting | Progress::At(_))).count()
    }

    fn completed(&self, agent: usize, visit: usize) -> bool {
        match self.progress[agent] {
            Progress::Done => true,
            Progress::At(v) => v > visit,
            _ => false,
        }
    }

    fn next_visit(&self, i: usize) -> Option<(usize, Visit)> {
        let v = match self.progress[i] {
            Progress::Waiting => 0,
            Progress::At(v) => v + 1,
            _ => return None,
        };
        self.order.visits[i].get(v).map(|&x| (v, x))
    }

    /// Updates progress from the simulator's positions.
    pub fn observe(&mut self, sim: &Simulation) -> Result<(), ExecError> {
        for i in 0..self.progress.len() {
            let a = sim.agent(i);
            let p = self.progress[i];
            if p == Progress::Unplanned {
                continue;
            }
            if a.phase == Phase::Done {
                self.progress[i] = Progress::Done;
                continue;
            }
            let visits = &self.order.visits[i];
            let cur = a.cell();
            self.progress[i] = match (p, cur) {
                (Progress::Waiting, None) => Progress::Waiting,
                (Progress::Waiting, Some(c)) if visits.first().map(|v| v.state.cell) == Some(c) => Progress::At(0),
                (Progress::At(v), Some(c)) if visits[v].state.cell == c => Progress::At(v),
                (Progress::At(v), Some(c)) if visits.get(v + 1).map(|x| x.state.cell) == Some(c) => Progress::At(v + 1),
                _ => return Err(ExecError::OffPlan { agent: i, t: sim.t() }),
            };
        }
        Ok(())
    }

    /// Which agents may advance this step, resolving chains of trains that
    /// follow each other into cells being vacated.
    pub fn permitted(&self, sim: &Simulation) -> Vec<bool> {
        let n = self.progress.len();
        let t = sim.t();
        // None: blocked; Some(None): free; Some(Some(j)): needs j to move
        let mut dep: Vec<Option<Option<usize>>> = vec![None; n];
        for i in 0..n {
            if sim.agent(i).is_malfunctioning() {
                continue;
            }
            let Some((_, next)) = self.next_visit(i) else { continue };
            if t + 1 < next.planned {
                continue;
            }
            let queue = self.order.queue(next.state.cell);
            let mut need = Some(None);
            for (k, &(j, w)) in queue[..next.slot].iter().enumerate().rev() {
                if self.completed(j, w) {
                    continue;
                }
                // only the immediate predecessor may still be inside, leaving now
                let leaving = k + 1 == next.slot
                    && self.progress[j] == Progress::At(w)
                    && sim.agent(j).cell() == Some(next.state.cell)
                    && self.next_visit(j).map(|(_, x)| Some(x.state.cell)) != Some(sim.agent(i).cell());
                need = if leaving && need == Some(None) { Some(Some(j)) } else { None };
                if need.is_none() {
                    break;
                }
            }
            if need == Some(None) {
                if let Some(occ) = sim.occupant(next.state.cell) {
                    if occ != i {
                        need = None;
                    }
                }
            }
            dep[i] = need;
        }
        // 0 unknown, 1 on stack, 2 granted, 3 denied
        let mut mark = vec![0u8; n];
        for s in 0..n {
            if mark[s] != 0 {
                continue;
            }
            let mut chain = Vec::new();
            let mut cur = s;
            let verdict = loop {
                match mark[cur] {
                    2 => break true,
                    3 => break false,
                    1 => {
                        let pos = chain.iter().position(|&x| x == cur).expect("on chain");
                        let ok = chain.len() - pos >= 3;
                        for &x in &chain[pos..] {
                            mark[x] = if ok { 2 } else { 3 };
                        }
                        chain.truncate(pos);
                        break ok;
                    }
                    _ => {}
                }
                mark[cur] = 1;
                chain.push(cur);
                match dep[cur] {
                    None => break false,
                    Some(None) => break true,
                    Some(Some(j)) => cur = j,
                }
            };
            for x in chain {
                mark[x] = if verdict { 2 } else { 3 };
            }
        }
        mark.iter().map(|&m| m == 2).collect()
    }

    /// Observes `sim` and returns one action per agent. Unplanned agents get
    /// `DoNothing`; callers may override them.
    pub fn actions(&mut self, sim: &Simulation) -> Result<Vec<Action>, ExecError> {
        self.observe(sim)?;
        let ok = self.permitted(sim);
        Ok((0..self.progress.len()).map(|i| self.action_for(sim.grid(), sim, i, ok[i])).collect())
    }

    fn action_for(&self, grid: &RailGrid, sim: &Simulation, i: usize, ok: bool) -> Action {
        let a = sim.agent(i);
        if a.is_malfunctioning() || a.is_done() {
            return Action::DoNothing;
        }
        match (self.progress[i], ok) {
            (Progress::Waiting, true) => Action::MoveForward,
            (Progress::At(_), true) => {
                let (_, next) = self.next_visit(i).expect("permitted implies a next visit");
                let cur = a.position.expect("on grid");
                action_between(grid, cur, next.state).unwrap_or(Action::Stop)
            }
            (Progress::At(_), false) => Action::Stop,
            _ => Action::DoNothing,
        }
    }

    /// Runs this executor on a look-ahead copy of `sim` with no further
    /// random breakdowns and returns each planned agent's trajectory from
    /// now on as a timed path ending in its target.
    pub fn project(&self, sim: &Simulation, limit: u32) -> Vec<Option<TimedPath>> {
        let n = self.progress.len();
        let mut look = sim.projection(limit);
        let mut exec = self.clone();
        let t0 = sim.t();
        let mut traj: Vec<(u32, Vec<State>)> = (0..n)
            .map(|i| match sim.agent(i).position {
                Some(s) => (t0, vec![s]),
                None => (u32::MAX, Vec::new()),
            })
            .collect();
        let mut arrived = vec![false; n];
        while !look.is_terminated() {
            let Ok(actions) = exec.actions(&look) else { break };
            if look.step(&actions).is_err() {
                break;
            }
            let t = look.t();
            for i in 0..n {
                if exec.progress[i] == Progress::Unplanned || arrived[i] {
                    continue;
                }
                let a = look.agent(i);
                if let Some(s) = a.position {
                    if traj[i].1.is_empty() {
                        traj[i].0 = t;
                    }
                    traj[i].1.push(s);
                } else if a.is_done() && sim.agent(i).phase != Phase::Done {
                    let last = exec.order.visits[i].last().expect("planned").state;
                    if traj[i].1.is_empty() {
                        traj[i].0 = t;
                    }
                    traj[i].1.push(last);
                    arrived[i] = true;
                }
            }
        }
        (0..n)
            .map(|i| {
                if !arrived[i] {
                    return None;
                }
                let (dep, states) = std::mem::take(&mut traj[i]);
                Some(TimedPath::new(i, dep, states))
            })
            .collect()
    }
}
