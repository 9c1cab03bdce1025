//! Directed state graphs over a rail grid and shortest-path distance maps.
//!
//! Vertices are (cell, arrival heading) pairs. The full form has a vertex
//! for every such state and unit edges; the condensed form keeps only
//! states at switches and collapses each corridor into one edge whose
//! length counts the cells entered along it, the far switch included.

use crate::rail::{Cell, Direction, RailGrid, State};
use petgraph::dot::{Config, Dot};
use petgraph::graph::DiGraph;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

pub type VertexId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
    pub len: u32,
    /// States passed through strictly between the endpoints.
    pub via: Vec<State>,
}

#[derive(Clone, Debug)]
pub struct DirectedRailGraph {
    condensed: bool,
    vertices: Vec<State>,
    lookup: HashMap<State, VertexId>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

fn is_branch(grid: &RailGrid, s: State) -> bool {
    grid.code(s.cell).exits(s.heading).len() >= 2
}

/// Builds the full or condensed state graph of `grid`.
pub fn build_graph(grid: &RailGrid, condensed: bool) -> DirectedRailGraph {
    let mut vertices = Vec::new();
    for cell in grid.rail_cells() {
        for s in grid.states_at(cell) {
            if !condensed || is_branch(grid, s) {
                vertices.push(s);
            }
        }
    }
    let lookup: HashMap<State, VertexId> = vertices.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut edges = Vec::new();
    for (from, &s) in vertices.iter().enumerate() {
        for next in grid.successors(s) {
            if !condensed {
                if let Some(&to) = lookup.get(&next) {
                    edges.push(Edge { from, to, len: 1, via: Vec::new() });
                }
                continue;
            }
            // walk the corridor until the next switch state
            let mut via = Vec::new();
            let mut cur = next;
            let mut len = 1;
            let end = loop {
                if let Some(&to) = lookup.get(&cur) {
                    break Some(to);
                }
                if !grid.is_state(cur) || via.len() > grid.cell_count() * 4 {
                    break None;
                }
                via.push(cur);
                match grid.successors(cur).next() {
                    Some(n) => cur = n,
                    None => break None,
                }
                len += 1;
            };
            if let Some(to) = end {
                edges.push(Edge { from, to, len, via });
            }
        }
    }
    let mut out = vec![Vec::new(); vertices.len()];
    let mut inc = vec![Vec::new(); vertices.len()];
    for (i, e) in edges.iter().enumerate() {
        out[e.from].push(i);
        inc[e.to].push(i);
    }
    DirectedRailGraph { condensed, vertices, lookup, edges, out, inc }
}

impl DirectedRailGraph {
    pub fn is_condensed(&self) -> bool {
        self.condensed
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[State] {
        &self.vertices
    }

    pub fn vertex(&self, v: VertexId) -> State {
        self.vertices[v]
    }

    pub fn id(&self, s: State) -> Option<VertexId> {
        self.lookup.get(&s).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = &Edge> + '_ {
        self.out[v].iter().map(move |&e| &self.edges[e])
    }

    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = &Edge> + '_ {
        self.inc[v].iter().map(move |&e| &self.edges[e])
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out[v].len()
    }

    pub fn to_petgraph(&self) -> DiGraph<State, u32> {
        let mut g = DiGraph::with_capacity(self.vertices.len(), self.edges.len());
        let nodes: Vec<_> = self.vertices.iter().map(|&s| g.add_node(s)).collect();
        for e in &self.edges {
            g.add_edge(nodes[e.from], nodes[e.to], e.len);
        }
        g
    }

    /// Graphviz rendering; vertices are labelled `row,col,heading`.
    pub fn to_dot(&self) -> String {
        let g = self.to_petgraph().map(
            |_, s| format!("{},{},{:?}", s.cell.row, s.cell.col, s.heading),
            |_, &len| len,
        );
        format!("{:?}", Dot::with_config(&g, &[Config::GraphContentOnly]))
            .lines()
            .fold(String::from("digraph {\n"), |acc, l| acc + l + "\n")
            + "}\n"
    }
}

/// Shortest number of moves from every state to the first entry into the
/// target cell. Indexed densely by `(cell, heading)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMap {
    target: Cell,
    width: u32,
    dist: Vec<u32>,
}

const UNREACHABLE: u32 = u32::MAX;

impl DistanceMap {
    fn slot(&self, s: State) -> Option<usize> {
        let i = (s.cell.row as usize * self.width as usize + s.cell.col as usize) * 4 + s.heading.index();
        (s.cell.col < self.width && i < self.dist.len()).then_some(i)
    }

    pub fn target(&self) -> Cell {
        self.target
    }

    pub fn get(&self, s: State) -> Option<u32> {
        self.slot(s).map(|i| self.dist[i]).filter(|&d| d != UNREACHABLE)
    }

    /// Distance for a train that is still off the grid: one step to enter.
    pub fn from_start(&self, start: State) -> Option<u32> {
        self.get(start).map(|d| d + 1)
    }

    fn set_min(&mut self, s: State, d: u32) -> bool {
        match self.slot(s) {
            Some(i) if d < self.dist[i] => {
                self.dist[i] = d;
                true
            }
            _ => false,
        }
    }

    /// Greedy descent along the map; ties go to the first exit in N, E, S, W
    /// order. Ends with the first state inside the target cell.
    pub fn shortest_path(&self, grid: &RailGrid, from: State) -> Option<Vec<State>> {
        let mut d = self.get(from)?;
        let mut path = vec![from];
        let mut cur = from;
        while d > 0 {
            let next = grid.successors(cur).find(|&n| self.get(n) == Some(d - 1))?;
            path.push(next);
            cur = next;
            d -= 1;
        }
        Some(path)
    }
}

/// Exact distances by reverse search from the target's entry states.
/// On the condensed graph, corridor-interior states are filled in as well.
pub fn distance_map(graph: &DirectedRailGraph, grid: &RailGrid, target: Cell) -> DistanceMap {
    let mut map = DistanceMap { target, width: grid.width(), dist: vec![UNREACHABLE; grid.cell_count() * 4] };
    for h in Direction::ALL {
        map.set_min(State::new(target, h), 0);
    }
    let mut best = vec![UNREACHABLE; graph.vertex_count()];
    let mut heap = BinaryHeap::new();
    for (v, s) in graph.vertices.iter().enumerate() {
        if s.cell == target {
            best[v] = 0;
            heap.push(Reverse((0u32, v)));
        }
    }
    // corridors that pass through the target seed their source vertex
    if graph.condensed {
        for e in &graph.edges {
            if let Some(k) = e.via.iter().position(|s| s.cell == target) {
                let d = k as u32 + 1;
                if d < best[e.from] {
                    best[e.from] = d;
                    heap.push(Reverse((d, e.from)));
                }
            }
        }
    }
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > best[v] {
            continue;
        }
        for e in graph.in_edges(v) {
            let nd = d + e.len;
            if nd < best[e.from] {
                best[e.from] = nd;
                heap.push(Reverse((nd, e.from)));
            }
        }
    }
    for (v, &d) in best.iter().enumerate() {
        if d != UNREACHABLE {
            map.set_min(graph.vertices[v], d);
        }
    }
    if graph.condensed {
        for e in &graph.edges {
            let tail = best[e.to];
            let hit = e.via.iter().position(|s| s.cell == target);
            for (i, &s) in e.via.iter().enumerate() {
                let d = match hit {
                    Some(k) if k >= i => (k - i) as u32,
                    _ if tail != UNREACHABLE => e.len - i as u32 - 1 + tail,
                    _ => continue,
                };
                map.set_min(s, d);
            }
        }
    }
    map
}

/// Convenience wrapper over the full graph.
pub fn full_distance_map(grid: &RailGrid, target: Cell) -> DistanceMap {
    distance_map(&build_graph(grid, false), grid, target)
}

/// Distance maps shared by target cell.
#[derive(Clone, Debug, Default)]
pub struct DistanceCache {
    maps: HashMap<Cell, std::sync::Arc<DistanceMap>>,
}

impl DistanceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, graph: &DirectedRailGraph, grid: &RailGrid, target: Cell) -> std::sync::Arc<DistanceMap> {
        self.maps
            .entry(target)
            .or_insert_with(|| std::sync::Arc::new(distance_map(graph, grid, target)))
            .clone()
    }
}
