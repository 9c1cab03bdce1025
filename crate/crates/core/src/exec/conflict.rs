use crate::graph::DistanceMap;
use crate::rail::{Cell, RailGrid, State};
use crate::solver::TimedPath;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

/// Default half-width of the time window in which two visits contend.
/// Matches the longest malfunction.
pub const CONFLICT_WINDOW: u32 = 50;

/// An agent's intended route as (cell, entry time) pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Intent {
    pub visits: Vec<(Cell, u32)>,
}

impl Intent {
    pub fn from_path(p: &TimedPath) -> Self {
        let mut visits: Vec<(Cell, u32)> = Vec::new();
        for (t, s) in p.timed_states() {
            if visits.last().map(|v| v.0) != Some(s.cell) {
                visits.push((s.cell, t));
            }
        }
        Intent { visits }
    }

    /// Shortest route from `from`, entered at `t0`, one cell per step.
    pub fn shortest(grid: &RailGrid, dist: &DistanceMap, from: State, t0: u32) -> Self {
        let states = dist.shortest_path(grid, from).unwrap_or_default();
        Intent { visits: states.iter().enumerate().map(|(k, s)| (s.cell, t0 + k as u32)).collect() }
    }
}

/// Undirected agent conflict graph.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConflictGraph {
    adj: Vec<BTreeSet<usize>>,
}

impl ConflictGraph {
    pub fn new(n: usize) -> Self {
        ConflictGraph { adj: vec![BTreeSet::new(); n] }
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().copied()
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, s) in self.adj.iter().enumerate() {
            out.extend(s.range(a + 1..).map(|&b| (a, b)));
        }
        out
    }

    pub fn max_degree(&self) -> usize {
        (0..self.adj.len()).map(|v| self.degree(v)).max().unwrap_or(0)
    }
}

/// Two agents conflict if they enter a common cell within `window` steps of
/// each other, or traverse a common link in opposite directions within it.
pub fn build_conflict_graph(intents: &[Option<Intent>], window: u32) -> ConflictGraph {
    let mut g = ConflictGraph::new(intents.len());
    let mut by_cell: HashMap<Cell, Vec<(usize, u32)>> = HashMap::new();
    let mut by_link: HashMap<(Cell, Cell), Vec<(usize, u32)>> = HashMap::new();
    for (i, it) in intents.iter().enumerate() {
        let Some(it) = it else { continue };
        for &(c, t) in &it.visits {
            by_cell.entry(c).or_default().push((i, t));
        }
        for w in it.visits.windows(2) {
            by_link.entry((w[0].0, w[1].0)).or_default().push((i, w[1].1));
        }
    }
    let near = |a: u32, b: u32| a.abs_diff(b) <= window;
    for users in by_cell.values() {
        for (k, &(i, ti)) in users.iter().enumerate() {
            for &(j, tj) in &users[k + 1..] {
                if i != j && near(ti, tj) {
                    g.add_edge(i, j);
                }
            }
        }
    }
    for (&(a, b), fwd) in &by_link {
        if a >= b {
            continue;
        }
        let Some(back) = by_link.get(&(b, a)) else { continue };
        for &(i, ti) in fwd {
            for &(j, tj) in back {
                if i != j && near(ti, tj) {
                    g.add_edge(i, j);
                }
            }
        }
    }
    g
}

/// Priority level per agent; 0 is the highest.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorityAssignment {
    pub levels: Vec<u32>,
}

impl PriorityAssignment {
    pub fn level(&self, agent: usize) -> u32 {
        self.levels[agent]
    }

    pub fn n_levels(&self) -> u32 {
        self.levels.iter().max().map_or(0, |m| m + 1)
    }

    /// No two neighbours share a level.
    pub fn is_proper(&self, g: &ConflictGraph) -> bool {
        g.edges().iter().all(|&(a, b)| self.levels[a] != self.levels[b])
    }
}

/// Greedy colouring by descending degree, ties by agent id. Each vertex gets
/// the smallest level not used by an already coloured neighbour.
pub fn assign_priorities(g: &ConflictGraph) -> PriorityAssignment {
    let n = g.n_vertices();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    let mut levels = vec![u32::MAX; n];
    for v in order {
        let used: BTreeSet<u32> = g.neighbors(v).map(|u| levels[u]).filter(|&l| l != u32::MAX).collect();
        levels[v] = (0..).find(|l| !used.contains(l)).expect("unbounded range");
    }
    PriorityAssignment { levels }
}
