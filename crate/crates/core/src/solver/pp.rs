use super::context::PlanningContext;
use super::path::Solution;
use super::sipp::{sipp_plan, Start};
use super::table::SafeIntervalTable;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// Ascending free-flow arrival time, ties by index.
    #[default]
    ShortestFirst,
    LongestFirst,
    ByIndex,
    Explicit(Vec<usize>),
}

impl Ordering {
    pub fn order(&self, ctx: &PlanningContext, agents: &[usize]) -> Vec<usize> {
        let key = |i: usize| ctx.free_flow_arrival(i).unwrap_or(u32::MAX);
        let mut v = agents.to_vec();
        match self {
            Ordering::ShortestFirst => v.sort_by_key(|&i| (key(i), i)),
            Ordering::LongestFirst => v.sort_by_key(|&i| (std::cmp::Reverse(key(i)), i)),
            Ordering::ByIndex => v.sort_unstable(),
            Ordering::Explicit(order) => {
                let rank = |i: usize| order.iter().position(|&x| x == i).unwrap_or(usize::MAX);
                v.sort_by_key(|&i| (rank(i), i));
            }
        }
        v
    }
}

/// Plans `order` one agent at a time against `table`, reserving each path
/// before the next. Agents without a path are listed in `failed`; their
/// slots stay `None`. Agents not in `order` keep the entry from `base`.
pub fn prioritized_plan_into(
    ctx: &PlanningContext,
    order: &[usize],
    table: &mut SafeIntervalTable,
    base: Solution,
) -> Solution {
    let mut sol = base;
    if sol.paths.len() < ctx.n_agents() {
        sol.paths.resize(ctx.n_agents(), None);
    }
    sol.failed.retain(|i| !order.contains(i));
    for &i in order {
        match sipp_plan(ctx, i, table, Start::fresh(), ctx.horizon()) {
            Ok(p) => {
                table.reserve_path(&p);
                sol.paths[i] = Some(p);
            }
            Err(_) => {
                sol.paths[i] = None;
                sol.failed.push(i);
            }
        }
    }
    sol
}

/// Prioritized planning for all agents from an empty table.
pub fn prioritized_plan(ctx: &PlanningContext, ordering: &Ordering) -> Solution {
    let all: Vec<usize> = (0..ctx.n_agents()).collect();
    let order = ordering.order(ctx, &all);
    let mut table = SafeIntervalTable::new(ctx.grid());
    prioritized_plan_into(ctx, &order, &mut table, Solution::empty(ctx.n_agents()))
}

/// Splits agents into those planned up front (the `threshold` with the
/// shortest free-flow routes) and those deferred to execution time.
pub fn lazy_partition(ctx: &PlanningContext, threshold: usize) -> (Vec<usize>, Vec<usize>) {
    let all: Vec<usize> = (0..ctx.n_agents()).collect();
    let mut order = Ordering::ShortestFirst.order(ctx, &all);
    let deferred = order.split_off(threshold.min(order.len()));
    (order, deferred)
}

/// Table holding every path of `sol` except those of `skip`.
pub fn table_for(ctx: &PlanningContext, sol: &Solution, skip: &[usize]) -> SafeIntervalTable {
    let mut t = SafeIntervalTable::new(ctx.grid());
    for (i, p) in sol.paths.iter().enumerate() {
        if let Some(p) = p {
            if !skip.contains(&i) {
                t.reserve_path(p);
            }
        }
    }
    t
}
