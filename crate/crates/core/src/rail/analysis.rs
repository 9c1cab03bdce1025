//! Cell classification, junction clusters and grid validation.

use super::direction::Direction;
use super::grid::{Cell, RailGrid, State};
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, VecDeque};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellClass {
    NonRail,
    NonDecision,
    /// Last place to halt before a junction.
    Stopping,
    /// Some entry heading offers two exits.
    Decision,
}

/// Class of every cell, indexed like the grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellClassMap {
    width: u32,
    classes: Vec<CellClass>,
}

impl CellClassMap {
    pub fn get(&self, cell: Cell) -> CellClass {
        self.classes[(cell.row * self.width + cell.col) as usize]
    }

    pub fn as_slice(&self) -> &[CellClass] {
        &self.classes
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }
}

/// Which cells count as junction cells when forming clusters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterCriterion {
    /// At least three (entry, exit) pairs in the cell. A diamond crossing
    /// qualifies even though it offers no choice.
    #[default]
    TotalTransitions,
    /// Some entry heading offers two exits.
    PerEntryChoice,
}

impl ClusterCriterion {
    pub fn is_member(self, grid: &RailGrid, cell: Cell) -> bool {
        let code = grid.code(cell);
        match self {
            ClusterCriterion::TotalTransitions => code.transition_count() >= 3,
            ClusterCriterion::PerEntryChoice => code.is_decision(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cluster {
    /// Member cells, sorted.
    pub cells: Vec<Cell>,
    /// Non-member rail cells linked into the cluster, sorted.
    pub entries: Vec<Cell>,
}

impl Cluster {
    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }
}

/// Neighbours a cell links to through its own track.
fn linked_neighbors(grid: &RailGrid, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
    grid.code(cell)
        .connected_sides()
        .iter()
        .filter_map(move |d| grid.neighbor(cell, d))
}

pub fn classify_cells(grid: &RailGrid) -> CellClassMap {
    let classes = grid
        .cells()
        .map(|cell| {
            let code = grid.code(cell);
            if !code.is_rail() {
                CellClass::NonRail
            } else if code.is_decision() {
                CellClass::Decision
            } else if linked_neighbors(grid, cell).any(|n| grid.code(n).transition_count() >= 3) {
                CellClass::Stopping
            } else {
                CellClass::NonDecision
            }
        })
        .collect();
    CellClassMap { width: grid.width(), classes }
}

pub fn find_clusters(grid: &RailGrid) -> Vec<Cluster> {
    find_clusters_with(grid, ClusterCriterion::default())
}

pub fn find_clusters_with(grid: &RailGrid, criterion: ClusterCriterion) -> Vec<Cluster> {
    let member = |c: Cell| criterion.is_member(grid, c);
    let linked = |a: Cell, b: Cell| {
        linked_neighbors(grid, a).any(|n| n == b) || linked_neighbors(grid, b).any(|n| n == a)
    };
    let mut seen = vec![false; grid.cell_count()];
    let mut clusters = Vec::new();
    for start in grid.cells() {
        if seen[grid.index(start)] || !member(start) {
            continue;
        }
        let mut cells = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        seen[grid.index(start)] = true;
        while let Some(c) = queue.pop_front() {
            cells.insert(c);
            for d in Direction::ALL {
                if let Some(n) = grid.neighbor(c, d) {
                    if !seen[grid.index(n)] && member(n) && linked(c, n) {
                        seen[grid.index(n)] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        let mut entries = BTreeSet::new();
        for &c in &cells {
            for d in Direction::ALL {
                if let Some(n) = grid.neighbor(c, d) {
                    if !cells.contains(&n) && grid.code(n).is_rail() && linked(c, n) {
                        entries.insert(n);
                    }
                }
            }
        }
        clusters.push(Cluster {
            cells: cells.into_iter().collect(),
            entries: entries.into_iter().collect(),
        });
    }
    clusters
}

/// Cluster index of every cell, `None` outside clusters.
pub fn cluster_index(grid: &RailGrid, clusters: &[Cluster]) -> Vec<Option<usize>> {
    let mut idx = vec![None; grid.cell_count()];
    for (k, cl) in clusters.iter().enumerate() {
        for &c in &cl.cells {
            idx[grid.index(c)] = Some(k);
        }
    }
    idx
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Violation {
    /// A train in this state has no exit into a cell that accepts it.
    DeadEnd { cell: Cell, heading: Direction },
    /// Track leaves through `side` but the neighbour does not continue it.
    AsymmetricLink { cell: Cell, side: Direction },
    /// Transition that reverses the train inside the cell.
    UTurn { cell: Cell, heading: Direction },
    /// No state of this cell lies on a directed cycle.
    NotOnCycle { cell: Cell },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn accepts(grid: &RailGrid, from: Cell, exit: Direction) -> bool {
    grid.neighbor(from, exit)
        .map(|n| !grid.code(n).exits(exit).is_empty())
        .unwrap_or(false)
}

pub fn validate_grid(grid: &RailGrid) -> ValidationReport {
    let mut v = BTreeSet::new();
    let mut graph: DiGraph<State, ()> = DiGraph::new();
    let mut nodes: HashMap<State, NodeIndex> = HashMap::new();

    for cell in grid.rail_cells() {
        let code = grid.code(cell);
        for side in code.connected_sides().iter() {
            let ok = grid
                .neighbor(cell, side)
                .map(|n| grid.code(n).connected_sides().contains(side.opposite()))
                .unwrap_or(false);
            if !ok {
                v.insert(Violation::AsymmetricLink { cell, side });
            }
        }
        for s in grid.states_at(cell) {
            nodes.insert(s, graph.add_node(s));
            let exits = code.exits(s.heading);
            if exits.contains(s.heading.opposite()) {
                v.insert(Violation::UTurn { cell, heading: s.heading });
            }
            if !exits.iter().any(|e| accepts(grid, cell, e)) {
                v.insert(Violation::DeadEnd { cell, heading: s.heading });
            }
        }
    }
    for (&s, &from) in &nodes {
        for e in grid.code(s.cell).exits(s.heading).iter() {
            if let Some(n) = grid.neighbor(s.cell, e) {
                if let Some(&to) = nodes.get(&State::new(n, e)) {
                    graph.add_edge(from, to, ());
                }
            }
        }
    }
    let mut on_cycle = vec![false; grid.cell_count()];
    for scc in petgraph::algo::tarjan_scc(&graph) {
        let cyclic = scc.len() > 1 || graph.contains_edge(scc[0], scc[0]);
        if cyclic {
            for n in scc {
                on_cycle[grid.index(graph[n].cell)] = true;
            }
        }
    }
    for cell in grid.rail_cells() {
        if !on_cycle[grid.index(cell)] {
            v.insert(Violation::NotOnCycle { cell });
        }
    }
    ValidationReport { violations: v.into_iter().collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rail::{TransitionCode, Transform};
    use Direction::*;

    fn c(r: u32, col: u32) -> Cell {
        Cell::new(r, col)
    }

    /// 7x5 grid: a rectangular loop with a passing siding on the top edge.
    ///
    /// ```text
    /// row 0:  . . . . . . .
    /// row 1:  + = S = = S +      S = switch, top track
    /// row 2:  |   \ - - /  |     siding on row 2 cols 2..=4
    /// row 3:  |            |
    /// row 4:  + - - - - - - +
    /// ```
    pub(crate) fn siding_loop() -> RailGrid {
        crate::fixtures::siding_loop()
    }

    #[test]
    fn siding_loop_is_valid() {
        let g = siding_loop();
        assert_eq!(validate_grid(&g).violations, vec![]);
    }

    #[test]
    fn classification_partitions_cells() {
        let g = siding_loop();
        let m = classify_cells(&g);
        assert_eq!(m.get(c(1, 1)), CellClass::Decision);
        assert_eq!(m.get(c(1, 5)), CellClass::Decision);
        assert_eq!(m.get(c(1, 0)), CellClass::Stopping);
        assert_eq!(m.get(c(2, 1)), CellClass::Stopping);
        assert_eq!(m.get(c(2, 3)), CellClass::NonDecision);
        assert_eq!(m.get(c(4, 3)), CellClass::NonDecision);
        assert_eq!(m.get(c(0, 0)), CellClass::NonRail);
        let total: usize = [CellClass::NonRail, CellClass::NonDecision, CellClass::Stopping, CellClass::Decision]
            .iter()
            .map(|&k| m.count(k))
            .sum();
        assert_eq!(total, g.cell_count());
    }

    #[test]
    fn corridor_interior_is_non_decision() {
        let mut g = RailGrid::new(10, 3).unwrap();
        let mut ring = vec![];
        for col in 0..10 {
            ring.push(c(0, col));
        }
        ring.push(c(1, 9));
        for col in (0..10).rev() {
            ring.push(c(2, col));
        }
        ring.push(c(1, 0));
        g.add_loop(&ring).unwrap();
        let m = classify_cells(&g);
        assert_eq!(m.get(c(0, 5)), CellClass::NonDecision);
        assert!(find_clusters(&g).is_empty());
    }

    #[test]
    fn isolated_and_adjacent_switch_clusters() {
        let g = siding_loop();
        let cl = find_clusters(&g);
        assert_eq!(cl.len(), 2);
        assert_eq!(cl[0].cells, vec![c(1, 1)]);
        assert_eq!(cl[0].entries, vec![c(1, 0), c(1, 2), c(2, 1)]);

        // two switches linked back to back form one cluster
        let mut g = RailGrid::new(4, 3).unwrap();
        let h = TransitionCode::from_pieces(&[(E, W)]).unwrap();
        for col in 0..4 {
            g.set(c(1, col), h).unwrap();
        }
        g.add_piece(c(1, 1), W, N).unwrap();
        g.add_piece(c(1, 2), S, E).unwrap();
        let cl = find_clusters(&g);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].cells, vec![c(1, 1), c(1, 2)]);
        assert_eq!(cl[0].entries, vec![c(1, 0), c(1, 3)]);
    }

    #[test]
    fn diamond_crossing_is_cluster_only_under_total_criterion() {
        let mut g = RailGrid::new(3, 3).unwrap();
        g.add_piece(c(1, 1), N, S).unwrap();
        g.add_piece(c(1, 1), E, W).unwrap();
        assert_eq!(find_clusters_with(&g, ClusterCriterion::TotalTransitions).len(), 1);
        assert!(find_clusters_with(&g, ClusterCriterion::PerEntryChoice).is_empty());
        assert_eq!(classify_cells(&g).get(c(1, 1)), CellClass::NonDecision);
    }

    #[test]
    fn open_segment_reports_dead_ends_both_ends() {
        let mut g = RailGrid::new(5, 1).unwrap();
        let h = TransitionCode::from_pieces(&[(E, W)]).unwrap();
        for col in 1..4 {
            g.set(c(0, col), h).unwrap();
        }
        let r = validate_grid(&g);
        assert!(r.violations.contains(&Violation::DeadEnd { cell: c(0, 1), heading: W }));
        assert!(r.violations.contains(&Violation::DeadEnd { cell: c(0, 3), heading: E }));
        assert!(r.violations.contains(&Violation::AsymmetricLink { cell: c(0, 3), side: E }));
        assert!(r.violations.contains(&Violation::NotOnCycle { cell: c(0, 2) }));
    }

    #[test]
    fn exit_into_non_rail_is_asymmetric() {
        let mut g = siding_loop();
        // turn a bottom-edge straight into a crossing whose north arm leads nowhere
        g.add_piece(c(4, 3), N, S).unwrap();
        let r = validate_grid(&g);
        assert!(r.violations.contains(&Violation::AsymmetricLink { cell: c(4, 3), side: N }));
    }

    #[test]
    fn clusters_stable_under_rotation() {
        let g = siding_loop();
        for t in Transform::ALL {
            let rg = g.transform(t);
            let mut expected: Vec<Vec<Cell>> = find_clusters(&g)
                .iter()
                .map(|k| {
                    let mut v: Vec<Cell> = k.cells.iter().map(|&x| g.transform_cell(x, t)).collect();
                    v.sort();
                    v
                })
                .collect();
            expected.sort();
            let mut got: Vec<Vec<Cell>> = find_clusters(&rg).into_iter().map(|k| k.cells).collect();
            got.sort();
            assert_eq!(got, expected, "{t:?}");
            assert!(validate_grid(&rg).is_clean());
        }
    }
}
