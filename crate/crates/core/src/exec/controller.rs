use super::mcp::McpExecutor;
use super::replan::{partial_replan, plan_deferred};
use crate::error::ExecError;
use crate::sim::{Action, Simulation};
use crate::solver::{lazy_partition, lns_improve, prioritized_plan_into, LnsConfig, LnsReport, Ordering, PlanningContext, SafeIntervalTable, Solution};
use std::time::{Duration, Instant};

/// Anything that drives all agents of one episode.
pub trait Controller: Send {
    fn name(&self) -> String;

    /// Called once after reset. May use time up to `deadline`.
    fn plan(&mut self, sim: &Simulation, deadline: Instant) -> Result<(), ExecError>;

    /// One action per agent for the current step.
    fn act(&mut self, sim: &Simulation, deadline: Instant) -> Result<Vec<Action>, ExecError>;

    /// Measured seconds per search iteration, for controllers that search.
    fn secs_per_iteration(&self) -> Option<f64> {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Planner {
    Prioritized(Ordering),
    Lns(LnsConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannedConfig {
    pub planner: Planner,
    /// Replan agents stuck behind a newly malfunctioning train.
    pub partial_replan: bool,
    /// Plan only this many agents up front; the rest join once fewer than
    /// this many planned agents remain active.
    pub lazy_threshold: Option<usize>,
    /// Share of a step's time that replanning may use.
    pub replan_share: f64,
}

impl PlannedConfig {
    pub fn pp() -> Self {
        PlannedConfig { planner: Planner::Prioritized(Ordering::default()), partial_replan: true, lazy_threshold: None, replan_share: 0.5 }
    }

    pub fn lns(cfg: LnsConfig) -> Self {
        PlannedConfig { planner: Planner::Lns(cfg), ..Self::pp() }
    }
}

/// Centralized planning followed by ordering-enforced execution.
pub struct PlannedController {
    cfg: PlannedConfig,
    ctx: Option<PlanningContext>,
    exec: Option<McpExecutor>,
    deferred: Vec<usize>,
    was_malfunctioning: Vec<bool>,
    pub solution: Option<Solution>,
    pub lns_report: Option<LnsReport>,
    pub replans: usize,
}

impl PlannedController {
    pub fn new(cfg: PlannedConfig) -> Self {
        PlannedController {
            cfg,
            ctx: None,
            exec: None,
            deferred: Vec::new(),
            was_malfunctioning: Vec::new(),
            solution: None,
            lns_report: None,
            replans: 0,
        }
    }

    pub fn executor(&self) -> Option<&McpExecutor> {
        self.exec.as_ref()
    }
}

impl Controller for PlannedController {
    fn name(&self) -> String {
        match self.cfg.planner {
            Planner::Prioritized(_) => "pp-sipp-mcp".into(),
            Planner::Lns(_) => "lns-mcp".into(),
        }
    }

    fn secs_per_iteration(&self) -> Option<f64> {
        self.lns_report.as_ref().and_then(|r| r.secs_per_iteration())
    }

    fn plan(&mut self, sim: &Simulation, deadline: Instant) -> Result<(), ExecError> {
        let ctx = PlanningContext::new(sim.env().clone());
        let all: Vec<usize> = (0..ctx.n_agents()).collect();
        let (now, later) = match self.cfg.lazy_threshold {
            Some(k) => lazy_partition(&ctx, k),
            None => (all, Vec::new()),
        };
        let ordering = match &self.cfg.planner {
            Planner::Prioritized(o) => o.clone(),
            Planner::Lns(_) => Ordering::default(),
        };
        let order = ordering.order(&ctx, &now);
        let mut table = SafeIntervalTable::new(ctx.grid());
        let mut sol = prioritized_plan_into(&ctx, &order, &mut table, Solution::empty(ctx.n_agents()));
        sol.failed.retain(|i| !later.contains(i));
        if let Planner::Lns(cfg) = &self.cfg.planner {
            let (best, report) = lns_improve(&ctx, sol, cfg, Some(deadline));
            sol = best;
            self.lns_report = Some(report);
        }
        self.exec = Some(McpExecutor::new(sol.paths.clone(), sim));
        self.solution = Some(sol);
        self.deferred = later;
        self.was_malfunctioning = sim.agents().iter().map(|a| a.is_malfunctioning()).collect();
        self.ctx = Some(ctx);
        Ok(())
    }

    fn act(&mut self, sim: &Simulation, deadline: Instant) -> Result<Vec<Action>, ExecError> {
        let (Some(ctx), Some(exec)) = (&self.ctx, &mut self.exec) else {
            return Err(ExecError::Controller("act before plan".into()));
        };
        exec.observe(sim)?;
        let now = Instant::now();
        let budget = deadline.saturating_duration_since(now).mul_f64(self.cfg.replan_share.clamp(0.0, 1.0));
        let replan_deadline = now + budget;
        if self.cfg.partial_replan {
            let fresh: Vec<usize> = (0..sim.n_agents())
                .filter(|&i| sim.agent(i).is_malfunctioning() && !self.was_malfunctioning[i])
                .collect();
            for i in fresh {
                let (next, report) = partial_replan(ctx, sim, exec, i, replan_deadline);
                if report.rebased {
                    *exec = next;
                    self.replans += 1;
                }
            }
        }
        if let Some(k) = self.cfg.lazy_threshold {
            if !self.deferred.is_empty() && exec.active() < k {
                let (next, added) = plan_deferred(ctx, sim, exec, &self.deferred, replan_deadline.max(now + Duration::from_millis(1)));
                if !added.is_empty() {
                    *exec = next;
                    self.deferred.retain(|i| !added.contains(i));
                }
            }
        }
        self.was_malfunctioning = sim.agents().iter().map(|a| a.is_malfunctioning()).collect();
        exec.actions(sim)
    }
}
