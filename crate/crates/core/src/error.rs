use crate::rail::{Cell, Direction};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RailError {
    #[error("transition code {bits:#06x} has more than two exits for entry {entry}")]
    TooManyExits { bits: u16, entry: Direction },
    #[error("grid dimensions must be positive, got {width}x{height}")]
    EmptyGrid { width: u32, height: u32 },
    #[error("grid has {got} cells, expected {expected}")]
    CellCount { expected: usize, got: usize },
    #[error("cell {0:?} is outside the grid")]
    OutOfBounds(Cell),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("agent {index}: {reason}")]
    InvalidAgent { index: usize, reason: String },
    #[error("episode already terminated at t={0}")]
    Terminated(u32),
    #[error("expected {expected} actions, got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("invalid malfunction parameters: {0}")]
    InvalidMalfunction(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("test index {0} out of range 0..=40")]
    TestOutOfRange(u32),
    #[error("environment index {0} out of range 0..=9")]
    EnvOutOfRange(u32),
    #[error("layout failed for test {test} seed {seed} after {attempts} attempts")]
    Placement { test: u32, seed: u64, attempts: u32 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("no path for agent {agent} within horizon {horizon}")]
    NoPath { agent: usize, horizon: u32 },
    #[error("agent {agent} start is unusable: {reason}")]
    BadStart { agent: usize, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecError {
    #[error("agent {agent} is off its planned path at t={t}; replan required")]
    OffPlan { agent: usize, t: u32 },
    #[error("agent {0} has no planned path")]
    Unplanned(usize),
    #[error("controller failure: {0}")]
    Controller(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObsError {
    #[error("agent {agent} at {cell:?} is on a masked non-decision cell")]
    Masked { agent: usize, cell: Cell },
    #[error("agent {0} has finished")]
    Finished(usize),
    #[error("tree depth {0} outside 1..=3")]
    Depth(u32),
}
