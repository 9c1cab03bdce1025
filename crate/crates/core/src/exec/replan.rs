use super::mcp::{McpExecutor, Progress};
use crate::rail::Cell;
use crate::sim::{Phase, Simulation};
use crate::solver::{sipp_plan, Ordering, PlanningContext, SafeIntervalTable, Start, TimedPath};
use std::time::Instant;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReplanReport {
    pub affected: Vec<usize>,
    pub replanned: Vec<usize>,
    /// Agents whose new arrival beat their projected one.
    pub improved: Vec<usize>,
    /// False when the projection could not be built and the old executor was kept.
    pub rebased: bool,
}

/// Agents that, according to `paths`, enter one of the junction cells on the
/// trigger's remaining route later than the trigger does.
pub fn affected_agents(sim: &Simulation, paths: &[Option<TimedPath>], trigger: usize) -> Vec<usize> {
    let grid = sim.grid();
    let Some(tp) = &paths[trigger] else { return Vec::new() };
    let junction = |c: Cell| grid.code(c).transition_count() >= 3;
    let mut first_visit: Vec<(Cell, u32)> = Vec::new();
    for (t, s) in tp.timed_states() {
        if junction(s.cell) && !first_visit.iter().any(|&(c, _)| c == s.cell) {
            first_visit.push((s.cell, t));
        }
    }
    let mut out = Vec::new();
    for (j, p) in paths.iter().enumerate() {
        let Some(p) = p else { continue };
        if j == trigger {
            continue;
        }
        let hit = p.timed_states().any(|(t, s)| first_visit.iter().any(|&(c, tt)| c == s.cell && t > tt));
        if hit {
            out.push(j);
        }
    }
    out
}

fn start_for(sim: &Simulation, i: usize) -> Start {
    let a = sim.agent(i);
    let t = sim.t();
    match a.position {
        Some(state) => Start::OnGrid { state, t, hold_until: t + a.malfunction_remaining },
        None => Start::OffGrid { earliest: t + 1 + a.malfunction_remaining },
    }
}

/// Builds an executor from the malfunction-free projection of `exec`. Fails
/// if some still-active planned agent would not arrive within `limit`.
fn rebase(exec: &McpExecutor, sim: &Simulation, limit: u32) -> Option<Vec<Option<TimedPath>>> {
    let proj = exec.project(sim, limit);
    for (i, p) in proj.iter().enumerate() {
        if p.is_none() && matches!(exec.progress(i), Progress::Waiting | Progress::At(_)) {
            return None;
        }
    }
    Some(proj)
}

fn base_table(ctx: &PlanningContext, sim: &Simulation, paths: &[Option<TimedPath>]) -> SafeIntervalTable {
    let mut table = SafeIntervalTable::new(ctx.grid());
    for (i, p) in paths.iter().enumerate() {
        match p {
            Some(p) => table.reserve_path(p),
            None => {
                if let (Phase::OnGrid, Some(c)) = (sim.agent(i).phase, sim.agent(i).cell()) {
                    table.reserve_forever(c, 0);
                }
            }
        }
    }
    table
}

/// Replans the agents held up by a malfunctioning `trigger`. Each affected
/// agent, in index order, is released from the projected schedule and
/// replanned from its current position; the new route is kept only if it
/// arrives earlier. Agents not reached before `deadline` keep their
/// projected slot, which is exactly what plain ordering enforcement would do.
pub fn partial_replan(
    ctx: &PlanningContext,
    sim: &Simulation,
    exec: &McpExecutor,
    trigger: usize,
    deadline: Instant,
) -> (McpExecutor, ReplanReport) {
    let mut report = ReplanReport::default();
    if Instant::now() >= deadline {
        return (exec.clone(), report);
    }
    let limit = ctx.horizon().max(sim.t() + ctx.horizon() / 2);
    let Some(mut paths) = rebase(exec, sim, limit) else { return (exec.clone(), report) };
    report.rebased = true;
    report.affected = affected_agents(sim, &paths, trigger);
    let mut table = base_table(ctx, sim, &paths);
    for &i in &report.affected {
        if Instant::now() >= deadline {
            break;
        }
        let old = paths[i].clone().expect("affected agents have paths");
        table.release_path(&old);
        report.replanned.push(i);
        match sipp_plan(ctx, i, &table, start_for(sim, i), limit) {
            Ok(p) if p.arrival < old.arrival => {
                table.reserve_path(&p);
                paths[i] = Some(p);
                report.improved.push(i);
            }
            _ => table.reserve_path(&old),
        }
    }
    (McpExecutor::new(paths, sim), report)
}

/// Plans agents that were held back at planning time, around the projected
/// schedule of everyone already planned. Returns the agents that got a path.
pub fn plan_deferred(
    ctx: &PlanningContext,
    sim: &Simulation,
    exec: &McpExecutor,
    agents: &[usize],
    deadline: Instant,
) -> (McpExecutor, Vec<usize>) {
    let todo: Vec<usize> = agents
        .iter()
        .copied()
        .filter(|&i| exec.progress(i) == Progress::Unplanned && sim.agent(i).phase == Phase::OffGrid)
        .collect();
    if todo.is_empty() || Instant::now() >= deadline {
        return (exec.clone(), Vec::new());
    }
    let limit = ctx.horizon().max(sim.t() + ctx.horizon() / 2);
    let Some(mut paths) = rebase(exec, sim, limit) else { return (exec.clone(), Vec::new()) };
    let mut table = base_table(ctx, sim, &paths);
    let mut added = Vec::new();
    for i in Ordering::ShortestFirst.order(ctx, &todo) {
        if Instant::now() >= deadline {
            break;
        }
        if let Ok(p) = sipp_plan(ctx, i, &table, start_for(sim, i), limit) {
            table.reserve_path(&p);
            paths[i] = Some(p);
            added.push(i);
        }
    }
    (McpExecutor::new(paths, sim), added)
}
