//! Centralized planning: prioritized planning over safe intervals, a
//! time-expanded oracle, large neighbourhood search and budget allocation.
//!
//! Timing model: every agent starts off the grid at t = 0. A path that
//! departs at `d` holds the origin at time `d` (so `d >= 1`), moves or waits
//! once per step, and ends on the first step inside the target cell. The
//! target is only held at that arrival instant. Cost is the sum of arrival
//! times.

mod context;
mod lns;
mod path;
mod pp;
mod sipp;
mod table;

pub use context::PlanningContext;
pub use lns::{
    budget_policy, lns_improve, select_neighborhood, BudgetHistory, LnsConfig, LnsReport, Neighborhood,
    NeighborhoodPicker,
};
pub use path::{check_solution, Conflict, Solution, TimedPath};
pub use pp::{lazy_partition, prioritized_plan, prioritized_plan_into, table_for, Ordering};
pub use sipp::{sipp_plan, time_expanded_astar, Start};
pub use table::{Interval, SafeIntervalTable};
