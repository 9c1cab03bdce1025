//! Static rail topology.

mod analysis;
mod direction;
mod grid;
mod transition;

pub use analysis::{
    classify_cells, cluster_index, find_clusters, find_clusters_with, validate_grid, CellClass, CellClassMap,
    Cluster, ClusterCriterion, ValidationReport, Violation,
};
pub use direction::{DirSet, Direction};
pub use grid::{Cell, RailGrid, State};
pub use transition::{TransitionCode, Transform};

/// Exit headings for a train entering a cell with `entry`.
pub fn valid_exits(code: TransitionCode, entry: Direction) -> DirSet {
    code.exits(entry)
}

pub fn transform_code(code: TransitionCode, t: Transform) -> TransitionCode {
    code.transform(t)
}
