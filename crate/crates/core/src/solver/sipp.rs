use super::context::PlanningContext;
use super::path::TimedPath;
use super::table::{Interval, SafeIntervalTable};
use crate::error::PlanError;
use crate::rail::{Cell, State};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

/// Where a search begins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    /// Not yet on the grid; may enter the origin at `earliest` or later.
    OffGrid { earliest: u32 },
    /// Holding `state` at time `t`, unable to move before `hold_until`.
    OnGrid { state: State, t: u32, hold_until: u32 },
}

impl Start {
    pub fn fresh() -> Self {
        Start::OffGrid { earliest: 1 }
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    state: State,
    interval: Interval,
    g: u32,
    min_dep: u32,
    parent: usize,
}

fn reconstruct(nodes: &[Node], mut i: usize, agent: usize) -> TimedPath {
    let mut chain = vec![i];
    while nodes[i].parent != usize::MAX {
        i = nodes[i].parent;
        chain.push(i);
    }
    chain.reverse();
    let departure = nodes[chain[0]].g;
    let mut states = vec![nodes[chain[0]].state];
    for w in chain.windows(2) {
        let (p, q) = (nodes[w[0]], nodes[w[1]]);
        for _ in p.g + 1..q.g {
            states.push(p.state);
        }
        states.push(q.state);
    }
    TimedPath::new(agent, departure, states)
}

/// Earliest-arrival path for `agent` that respects every reservation in
/// `table`. Searches over (state, safe interval) pairs with the distance map
/// as heuristic.
pub fn sipp_plan(
    ctx: &PlanningContext,
    agent: usize,
    table: &SafeIntervalTable,
    start: Start,
    horizon: u32,
) -> Result<TimedPath, PlanError> {
    let grid = ctx.grid();
    let dist = ctx.dist(agent);
    let target = ctx.target(agent);
    let no_path = || PlanError::NoPath { agent, horizon };
    let mut cache: HashMap<Cell, Vec<Interval>> = HashMap::new();
    let mut intervals = |c: Cell| -> Vec<Interval> {
        cache.entry(c).or_insert_with(|| table.safe_intervals(c, horizon)).clone()
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut best: HashMap<(State, u32), u32> = HashMap::new();
    type Heap = BinaryHeap<Reverse<(u32, u32, usize)>>;
    let push = |best: &mut HashMap<(State, u32), u32>, nodes: &mut Vec<Node>, heap: &mut Heap, n: Node, h: u32| {
        let key = (n.state, n.interval.0);
        if best.get(&key).is_some_and(|&g| g <= n.g) {
            return;
        }
        best.insert(key, n.g);
        nodes.push(n);
        heap.push(Reverse((n.g + h, n.g, nodes.len() - 1)));
    };

    match start {
        Start::OffGrid { earliest } => {
            let s = ctx.agent(agent).start_state();
            let h = dist.get(s).ok_or_else(no_path)?;
            for iv in intervals(s.cell) {
                let g = iv.0.max(earliest.max(1));
                if g <= iv.1 && g <= horizon {
                    push(&mut best, &mut nodes, &mut heap, Node { state: s, interval: iv, g, min_dep: 0, parent: usize::MAX }, h);
                }
            }
        }
        Start::OnGrid { state, t, hold_until } => {
            let h = dist.get(state).ok_or_else(no_path)?;
            let iv = intervals(state.cell)
                .into_iter()
                .find(|&(a, b)| a <= t && t <= b)
                .ok_or_else(|| PlanError::BadStart { agent, reason: format!("cell reserved at t={t}") })?;
            if iv.1 < hold_until {
                return Err(PlanError::BadStart { agent, reason: format!("cell reserved before t={hold_until}") });
            }
            push(&mut best, &mut nodes, &mut heap, Node { state, interval: iv, g: t, min_dep: hold_until, parent: usize::MAX }, h);
        }
    }

    let mut expanded: HashSet<usize> = HashSet::new();
    while let Some(Reverse((_, g, i))) = heap.pop() {
        let n = nodes[i];
        if best.get(&(n.state, n.interval.0)) != Some(&g) || !expanded.insert(i) {
            continue;
        }
        if n.state.cell == target {
            return Ok(reconstruct(&nodes, i, agent));
        }
        let dep_min = g.max(n.min_dep);
        for next in grid.successors(n.state) {
            let Some(h) = dist.get(next) else { continue };
            for iv in intervals(next.cell) {
                if iv.0 > n.interval.1 + 1 {
                    break;
                }
                let mut t_arr = (dep_min + 1).max(iv.0);
                while t_arr <= iv.1 && t_arr - 1 <= n.interval.1 && table.swaps(n.state.cell, next.cell, t_arr - 1) {
                    t_arr += 1;
                }
                if t_arr > iv.1 || t_arr - 1 > n.interval.1 || t_arr > horizon {
                    continue;
                }
                push(&mut best, &mut nodes, &mut heap, Node { state: next, interval: iv, g: t_arr, min_dep: 0, parent: i }, h);
            }
        }
    }
    Err(no_path())
}

/// Plain A* over (state, time), with waiting off the grid modelled as its
/// own state. Exponentially slower than [`sipp_plan`]; used as an oracle.
pub fn time_expanded_astar(
    ctx: &PlanningContext,
    agent: usize,
    table: &SafeIntervalTable,
    start: Start,
    horizon: u32,
) -> Result<TimedPath, PlanError> {
    let grid = ctx.grid();
    let dist = ctx.dist(agent);
    let target = ctx.target(agent);
    let origin = ctx.agent(agent).start_state();
    let no_path = PlanError::NoPath { agent, horizon };
    // None stands for "off the grid"
    type Key = (Option<State>, u32);
    let mut parent: HashMap<Key, Key> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let h = |s: Option<State>| match s {
        Some(s) => dist.get(s),
        None => dist.get(origin).map(|d| d + 1),
    };
    let (root, min_dep, earliest) = match start {
        Start::OffGrid { earliest } => ((None, 0), 0, earliest.max(1)),
        Start::OnGrid { state, t, hold_until } => {
            if !table.is_free(state.cell, t) {
                return Err(PlanError::BadStart { agent, reason: format!("cell reserved at t={t}") });
            }
            ((Some(state), t), hold_until, 0)
        }
    };
    let Some(h0) = h(root.0) else { return Err(no_path) };
    heap.push(Reverse((root.1 + h0, root.1, root)));
    let mut seen: HashSet<Key> = HashSet::from([root]);
    while let Some(Reverse((_, t, key))) = heap.pop() {
        if let Some(s) = key.0 {
            if s.cell == target {
                let mut states = vec![s];
                let mut k = key;
                while let Some(&p) = parent.get(&k) {
                    match p.0 {
                        Some(ps) => states.push(ps),
                        None => break,
                    }
                    k = p;
                }
                states.reverse();
                let departure = t + 1 - states.len() as u32;
                return Ok(TimedPath::new(agent, departure, states));
            }
        }
        if t >= horizon {
            continue;
        }
        let nt = t + 1;
        let mut succ: Vec<Option<State>> = Vec::new();
        match key.0 {
            None => {
                succ.push(None);
                if nt >= earliest && table.is_free(origin.cell, nt) {
                    succ.push(Some(origin));
                }
            }
            Some(s) => {
                if table.is_free(s.cell, nt) {
                    succ.push(Some(s));
                }
                if t >= min_dep {
                    for n in grid.successors(s) {
                        if table.is_free(n.cell, nt) && !table.swaps(s.cell, n.cell, t) {
                            succ.push(Some(n));
                        }
                    }
                }
            }
        }
        for s in succ {
            let k = (s, nt);
            let Some(hv) = h(s) else { continue };
            if seen.insert(k) {
                parent.insert(k, key);
                heap.push(Reverse((nt + hv, nt, k)));
            }
        }
    }
    Err(no_path)
}
