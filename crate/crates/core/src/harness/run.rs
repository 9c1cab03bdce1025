use super::external::ExternalController;
use super::limits::{Limits, SeedSpec};
use super::report::{check_termination, EnvResult, EvalReport, Verdict};
use crate::exec::{Controller, HeuristicController, PlannedConfig, PlannedController};
use crate::gen::{generate, test_params, GenConfig, ENVS_PER_TEST};
use crate::sim::{EpisodeTrace, Environment, Simulation};
use crate::solver::{budget_policy, BudgetHistory, LnsConfig};
use std::fmt;
use std::ops::Range;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

#[derive(Clone, Debug, PartialEq)]
pub enum ControllerSpec {
    PpSippMcp,
    LnsMcp(LnsConfig),
    MaskedHeuristic,
    External(String),
}

impl FromStr for ControllerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pp-sipp-mcp" => Ok(ControllerSpec::PpSippMcp),
            "lns-mcp" => Ok(ControllerSpec::LnsMcp(LnsConfig::default())),
            "masked-heuristic" => Ok(ControllerSpec::MaskedHeuristic),
            _ => match s.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(ControllerSpec::External(cmd.to_string())),
                _ => Err(format!("unknown controller `{s}`")),
            },
        }
    }
}

impl fmt::Display for ControllerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControllerSpec::PpSippMcp => f.write_str("pp-sipp-mcp"),
            ControllerSpec::LnsMcp(_) => f.write_str("lns-mcp"),
            ControllerSpec::MaskedHeuristic => f.write_str("masked-heuristic"),
            ControllerSpec::External(c) => write!(f, "external:{c}"),
        }
    }
}

impl ControllerSpec {
    pub fn build(&self) -> Box<dyn Controller> {
        match self {
            ControllerSpec::PpSippMcp => Box::new(PlannedController::new(PlannedConfig::pp())),
            ControllerSpec::LnsMcp(cfg) => Box::new(PlannedController::new(PlannedConfig::lns(cfg.clone()))),
            ControllerSpec::MaskedHeuristic => Box::new(HeuristicController::new()),
            ControllerSpec::External(cmd) => Box::new(ExternalController::new(cmd.clone())),
        }
    }
}

fn deadline(limits: &Limits, secs: f64) -> Instant {
    let d = if limits.enforce { secs } else { 365.0 * 86400.0 };
    Instant::now() + Duration::from_secs_f64(d)
}

/// Runs one episode under the limits. A crash or a missed deadline scores
/// 0; the partial trace is still returned.
pub fn run_episode(ctl: &mut dyn Controller, env: Arc<Environment>, seed: u64, limits: &Limits) -> (EnvResult, Option<EpisodeTrace>) {
    let start = Instant::now();
    let mut res = EnvResult { seed, n_agents: env.agents.len(), ..Default::default() };
    if let Some(o) = &env.origin {
        res.test = o.test;
        res.env = o.env;
    }
    let mut sim = match Simulation::reset(env, seed) {
        Ok(s) => s,
        Err(e) => {
            res.crashed = true;
            res.note = Some(format!("reset: {e}"));
            return (res, None);
        }
    };
    let fail = |res: &mut EnvResult, timed_out: bool, note: String| {
        res.timed_out = timed_out;
        res.crashed = !timed_out;
        res.note = Some(note);
    };
    let plan_deadline = deadline(limits, limits.planning_secs);
    match catch_unwind(AssertUnwindSafe(|| ctl.plan(&sim, plan_deadline))) {
        Err(_) => fail(&mut res, false, "controller panicked while planning".into()),
        Ok(Err(e)) => fail(&mut res, limits.enforce && Instant::now() >= plan_deadline, format!("plan: {e}")),
        Ok(Ok(())) if limits.enforce && Instant::now() > plan_deadline => fail(&mut res, true, "planning timeout".into()),
        Ok(Ok(())) => {}
    }
    while res.note.is_none() && !sim.is_terminated() {
        let step_deadline = deadline(limits, limits.step_secs);
        let actions = match catch_unwind(AssertUnwindSafe(|| ctl.act(&sim, step_deadline))) {
            Err(_) => {
                fail(&mut res, false, format!("controller panicked at t={}", sim.t()));
                break;
            }
            Ok(Err(e)) => {
                let timeout = limits.enforce && Instant::now() >= step_deadline;
                fail(&mut res, timeout, format!("t={}: {e}", sim.t()));
                break;
            }
            Ok(Ok(a)) => a,
        };
        if limits.enforce && Instant::now() > step_deadline {
            fail(&mut res, true, format!("step timeout at t={}", sim.t()));
            break;
        }
        if let Err(e) = sim.step(&actions) {
            fail(&mut res, false, format!("step: {e}"));
        }
    }
    res.steps = sim.t();
    res.agents_done = sim.agents().iter().filter(|a| a.is_done()).count();
    res.score = if res.note.is_none() { sim.score() } else { 0.0 };
    res.wall_secs = start.elapsed().as_secs_f64();
    res.secs_per_iteration = ctl.secs_per_iteration();
    (res, Some(sim.trace()))
}

/// Evaluation run over a range of tests.
#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub controller: ControllerSpec,
    pub tests: Range<u32>,
    pub limits: Limits,
    pub seeds: SeedSpec,
    pub trace_dir: Option<PathBuf>,
}

fn trace_path(dir: &Path, test: u32, env: u32) -> PathBuf {
    dir.join(format!("test{test:02}_env{env:02}.jsonl"))
}

fn evaluate_env(cfg: &EvalConfig, test: u32, env_id: u32, iterations: Option<u32>) -> (EnvResult, Option<EpisodeTrace>) {
    let seed = cfg.seeds.seed(test, env_id);
    let generated = test_params(test, env_id).map_err(|e| e.to_string()).and_then(|p| generate(&p, &GenConfig::new(seed)).map_err(|e| e.to_string()));
    let env = match generated {
        Ok(e) => Arc::new(e),
        Err(e) => {
            let res = EnvResult { test, env: env_id, seed, crashed: true, note: Some(format!("generation: {e}")), ..Default::default() };
            return (res, None);
        }
    };
    let spec = match (&cfg.controller, iterations) {
        (ControllerSpec::LnsMcp(c), Some(n)) => ControllerSpec::LnsMcp(LnsConfig { iterations: n.min(c.iterations), ..c.clone() }),
        (s, _) => s.clone(),
    };
    let mut ctl = spec.build();
    let (mut res, trace) = run_episode(ctl.as_mut(), env, seed, &cfg.limits);
    res.test = test;
    res.env = env_id;
    (res, trace)
}

/// Runs every environment of every test in `cfg.tests`, up to
/// `limits.workers` environments at a time, and stops early on the
/// termination rules.
pub fn run_evaluation(cfg: &EvalConfig) -> anyhow::Result<EvalReport> {
    cfg.limits.validate().map_err(anyhow::Error::msg)?;
    if let Some(d) = &cfg.trace_dir {
        std::fs::create_dir_all(d)?;
    }
    let start = Instant::now();
    let mut report = EvalReport { controller: cfg.controller.to_string(), ..Default::default() };
    let history = Mutex::new(BudgetHistory::new(cfg.limits.budget_secs));
    let total_envs = cfg.tests.len() * ENVS_PER_TEST as usize;
    let budget_left = |now: Instant| {
        if cfg.limits.enforce {
            cfg.limits.budget_secs - now.duration_since(start).as_secs_f64()
        } else {
            f64::INFINITY
        }
    };
    'tests: for test in cfg.tests.clone() {
        let ids: Vec<u32> = (0..ENVS_PER_TEST).collect();
        for chunk in ids.chunks(cfg.limits.workers.max(1)) {
            let done_so_far = report.envs.len();
            let iterations: Vec<Option<u32>> = chunk
                .iter()
                .map(|&l| {
                    if !cfg.limits.enforce {
                        return None;
                    }
                    let n = test_params(test, l).map(|p| p.n_agents as usize).unwrap_or(1);
                    let h = history.lock().expect("history");
                    Some(budget_policy(n, budget_left(Instant::now()), total_envs.saturating_sub(done_so_far).max(1), &h))
                })
                .collect();
            let results: Vec<(EnvResult, Option<EpisodeTrace>)> = std::thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .zip(&iterations)
                    .map(|(&l, &it)| s.spawn(move || evaluate_env(cfg, test, l, it)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("evaluation worker")).collect()
            });
            for (k, (res, trace)) in results.into_iter().enumerate() {
                if let (Some(dir), Some(tr)) = (&cfg.trace_dir, &trace) {
                    std::fs::write(trace_path(dir, test, res.env), tr.to_jsonl_string())?;
                }
                if let Some(spi) = res.secs_per_iteration {
                    history.lock().expect("history").record(res.n_agents, spi);
                }
                let last_of_test = chunk[k] + 1 == ENVS_PER_TEST;
                report.envs.push(res);
                if let Verdict::Stop(reason) = check_termination(&report.envs, last_of_test, budget_left(Instant::now())) {
                    report.termination = Some(reason);
                    break 'tests;
                }
            }
        }
    }
    report.recompute_total();
    report.wall_secs = start.elapsed().as_secs_f64();
    Ok(report)
}
