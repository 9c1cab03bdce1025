//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

#[path = "acceptance/oracles.rs"]
mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use railmapf::exec::*;
use railmapf::fixtures;
use railmapf::gen::{full_schedule, generate, test_params, GenConfig, N_TESTS};
use railmapf::harness::*;
use railmapf::obs::*;
use railmapf::rail::{find_clusters, Cell, Direction, Direction::*};
use railmapf::sim::{Action, AgentSpec, EpisodeTrace, Environment, Simulation};
use railmapf::solver::*;
use std::sync::Arc;
use std::time::{Duration, Instant};

fn verdict(id: u32, name: &str, ok: bool, detail: String, started: Instant) {
    let secs = started.elapsed().as_secs_f64();
    println!("[{id:2}] {name:<28} {} ({detail}; {secs:.2}s)", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn c(r: u32, col: u32) -> Cell {
    Cell::new(r, col)
}

fn spec(o: Cell, d: Direction, t: Cell) -> AgentSpec {
    AgentSpec { origin: o, direction: d, target: t }
}

fn far() -> Instant {
    Instant::now() + Duration::from_secs(3600)
}

fn small_env(k: u32, l: u32, seed: u64) -> Arc<Environment> {
    Arc::new(generate(&test_params(k, l).unwrap(), &GenConfig::new(seed)).unwrap())
}

#[test]
fn c01_schedule_fidelity() {
    let started = Instant::now();
    let all = full_schedule();
    let firsts: Vec<_> = all.iter().filter(|p| p.env == 0).collect();
    let agents: Vec<u32> = firsts.iter().map(|p| p.n_agents).collect();
    let k22 = test_params(22, 0).unwrap();
    let checks = [
        ("41 tests", firsts.len() == 41 && N_TESTS == 41),
        ("agents start at 1", agents.first() == Some(&1)),
        ("agents end at 6256", agents.last() == Some(&6256)),
        ("k=22 is 181 agents, 20 cities", (k22.n_agents, k22.n_cities) == (181, 20)),
        ("x_dim 25 at k=0", firsts[0].x_dim == 25),
        ("x_dim 314 at k=40", firsts[40].x_dim == 314),
        ("square grids", all.iter().all(|p| p.x_dim == p.y_dim)),
        ("under 1 s", started.elapsed() < Duration::from_secs(1)),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    verdict(1, "schedule fidelity", failed.is_empty(), format!("failed: {failed:?}"), started);
}

/// Random actions from a seeded stream, biased towards moving forward.
fn scripted_episode(seed: u64, idle: bool) -> (Simulation, EpisodeTrace) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(0..6);
    let l = rng.gen_range(0..3);
    let env = small_env(k, l, seed);
    let mut sim = Simulation::reset(env, seed).unwrap();
    while !sim.is_terminated() {
        let actions: Vec<Action> = (0..sim.n_agents())
            .map(|_| match (idle, rng.gen_range(0..10)) {
                (true, _) => Action::DoNothing,
                (false, 0) => Action::MoveLeft,
                (false, 1) => Action::MoveRight,
                (false, 2) => Action::Stop,
                (false, 3) => Action::DoNothing,
                _ => Action::MoveForward,
            })
            .collect();
        sim.step(&actions).unwrap();
    }
    let trace = sim.trace();
    (sim, trace)
}

#[test]
fn c02_scoring_identities() {
    let started = Instant::now();
    let mut mismatches = Vec::new();
    let mut out_of_range = 0;
    let mut finished = 0;
    for seed in 0..200u64 {
        let (sim, trace) = scripted_episode(seed, false);
        let rewards = oracles::rewards_from_positions(&trace);
        let oracle = oracles::score_from_rewards(&rewards, trace.header.t_max);
        let summary = trace.summary.as_ref().unwrap();
        if rewards != summary.rewards || oracle != trace.score() || oracle != sim.score() {
            mismatches.push(seed);
        }
        if !(0.0..1.0).contains(&trace.score()) {
            out_of_range += 1;
        }
        finished += usize::from(sim.all_done());
    }
    let idle_nonzero: Vec<u64> = (0..20).filter(|&s| scripted_episode(1000 + s, true).0.score() != 0.0).collect();
    let ok = mismatches.is_empty() && out_of_range == 0 && idle_nonzero.is_empty() && started.elapsed() < Duration::from_secs(60);
    verdict(
        2,
        "scoring identities",
        ok,
        format!("200 episodes ({finished} fully finished), mismatches {mismatches:?}, out of [0,1): {out_of_range}, idle non-zero {idle_nonzero:?}"),
        started,
    );
}

#[test]
fn c03_sipp_matches_time_expanded_search() {
    let started = Instant::now();
    let mut bad = Vec::new();
    let mut reserved_total = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(0..=10);
        let mut p = test_params(k, 0).unwrap();
        assert!(p.x_dim <= 30 && p.y_dim <= 30);
        p.n_agents = rng.gen_range(2..=9);
        let env = Arc::new(generate(&p, &GenConfig::new(seed)).unwrap());
        let ctx = PlanningContext::new(env.clone());
        let mut table = SafeIntervalTable::new(ctx.grid());
        for i in 1..env.agents.len() {
            let start = Start::OffGrid { earliest: rng.gen_range(1..20) };
            if let Ok(path) = sipp_plan(&ctx, i, &table, start, ctx.horizon()) {
                table.reserve_path(&path);
                reserved_total += 1;
            }
        }
        let start = Start::OffGrid { earliest: rng.gen_range(1..10) };
        let a = sipp_plan(&ctx, 0, &table, start, ctx.horizon()).map(|p| p.arrival).ok();
        let b = time_expanded_astar(&ctx, 0, &table, start, ctx.horizon()).map(|p| p.arrival).ok();
        if a != b {
            bad.push((seed, a, b));
        }
    }
    let ok = bad.is_empty() && started.elapsed() < Duration::from_secs(300);
    verdict(3, "SIPP equals A* oracle", ok, format!("100 instances, {reserved_total} reserved paths, mismatches {bad:?}"), started);
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n <= 1 {
        return vec![(0..n).collect()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

/// Single track with a siding, opposing and following trains, and merges
/// at the switches.
fn contention_instances() -> Vec<Environment> {
    let pl = |w| fixtures::passing_loop(w, 5);
    let ring = || fixtures::ring(6, 4);
    let cases = vec![
        (pl(7), vec![spec(c(1, 2), E, c(1, 6)), spec(c(1, 4), W, c(1, 0))]),
        (pl(7), vec![spec(c(1, 2), E, c(4, 6)), spec(c(2, 4), W, c(3, 0))]),
        (pl(7), vec![spec(c(2, 2), E, c(1, 6)), spec(c(1, 4), W, c(4, 0))]),
        (pl(7), vec![spec(c(1, 3), W, c(3, 0)), spec(c(2, 3), W, c(4, 0))]),
        (pl(7), vec![spec(c(1, 3), W, c(4, 1)), spec(c(2, 3), W, c(3, 0))]),
        (pl(7), vec![spec(c(1, 2), E, c(4, 3)), spec(c(1, 3), E, c(1, 6))]),
        (pl(8), vec![spec(c(1, 2), E, c(1, 7)), spec(c(1, 5), W, c(1, 0))]),
        (pl(8), vec![spec(c(3, 0), N, c(1, 7)), spec(c(3, 7), N, c(1, 0))]),
        (pl(8), vec![spec(c(3, 0), N, c(2, 6)), spec(c(1, 4), W, c(4, 2))]),
        (pl(6), vec![spec(c(1, 2), E, c(4, 4)), spec(c(1, 3), W, c(4, 1))]),
        (pl(6), vec![spec(c(3, 0), N, c(3, 5)), spec(c(3, 5), N, c(3, 0))]),
        (ring(), vec![spec(c(0, 1), E, c(0, 4)), spec(c(0, 4), W, c(3, 2))]),
        (ring(), vec![spec(c(0, 1), E, c(3, 1)), spec(c(0, 2), E, c(3, 4))]),
        (pl(8), vec![spec(c(2, 2), E, c(1, 7)), spec(c(2, 5), W, c(1, 0))]),
        (pl(7), vec![spec(c(1, 2), E, c(1, 6)), spec(c(1, 4), W, c(1, 0)), spec(c(2, 3), E, c(4, 5))]),
        (pl(7), vec![spec(c(1, 3), W, c(3, 0)), spec(c(2, 3), W, c(4, 0)), spec(c(1, 5), W, c(4, 3))]),
        (pl(7), vec![spec(c(3, 0), N, c(1, 6)), spec(c(3, 6), N, c(1, 0)), spec(c(1, 3), E, c(4, 3))]),
        (pl(8), vec![spec(c(1, 2), E, c(4, 7)), spec(c(1, 6), W, c(4, 0)), spec(c(2, 4), W, c(3, 0))]),
        (ring(), vec![spec(c(0, 1), E, c(0, 4)), spec(c(0, 2), E, c(3, 3)), spec(c(3, 4), W, c(0, 3))]),
        (pl(6), vec![spec(c(1, 2), E, c(3, 5)), spec(c(1, 3), W, c(3, 0)), spec(c(2, 2), E, c(4, 2))]),
    ];
    cases.into_iter().map(|(g, a)| Environment::new(g, a, 2)).collect()
}

#[test]
fn c04_prioritized_matches_joint_optimum() {
    let started = Instant::now();
    let mut rows = Vec::new();
    let mut contended = 0;
    for (k, env) in contention_instances().into_iter().enumerate() {
        let n = env.agents.len();
        let joint = oracles::joint_optimum(&env);
        let ctx = PlanningContext::new(Arc::new(env));
        let free: u64 = (0..n).map(|i| ctx.free_flow_arrival(i).unwrap() as u64).sum();
        let pp = permutations(n)
            .into_iter()
            .map(|p| prioritized_plan(&ctx, &Ordering::Explicit(p)))
            .filter(|s| s.planned() == n)
            .map(|s| s.cost())
            .min();
        contended += usize::from(joint.is_some_and(|j| j > free));
        rows.push((k, pp, joint));
    }
    let bad: Vec<_> = rows.iter().filter(|r| r.1.is_none() || r.1 != r.2).collect();
    let ok = rows.len() == 20 && bad.is_empty() && started.elapsed() < Duration::from_secs(120);
    verdict(4, "PP equals joint optimum", ok, format!("20 instances ({contended} with delays), mismatches {bad:?}"), started);
}

#[test]
fn c05_lns_monotone_and_improving() {
    let started = Instant::now();
    let mut improved = 0;
    let mut non_monotone = Vec::new();
    let mut gains = Vec::new();
    for seed in 0..25u64 {
        let mut p = test_params(12, 0).unwrap();
        p.n_agents = 20;
        let env = Arc::new(generate(&p, &GenConfig::new(seed)).unwrap());
        let ctx = PlanningContext::new(env);
        let pp = prioritized_plan(&ctx, &Ordering::default());
        let cfg = LnsConfig { iterations: 200, seed, ..LnsConfig::default() };
        let (best, report) = lns_improve(&ctx, pp.clone(), &cfg, None);
        if report.trajectory.windows(2).any(|w| w[1] > w[0]) || best.rank() > pp.rank() {
            non_monotone.push(seed);
        }
        if best.planned() >= pp.planned() && best.cost() < pp.cost() || best.planned() > pp.planned() {
            improved += 1;
        }
        gains.push(pp.cost() as i64 - best.cost() as i64);
    }
    let ok = non_monotone.is_empty() && improved * 100 >= 80 * 25 && started.elapsed() < Duration::from_secs(600);
    verdict(
        5,
        "LNS monotone and improving",
        ok,
        format!("{improved}/25 improved (need 20), cost gains {gains:?}, non-monotone {non_monotone:?}"),
        started,
    );
}

#[test]
fn c06_mcp_robustness() {
    let started = Instant::now();
    let (mut agents, mut arrived, mut deadlocks, mut breakdowns) = (0, 0, 0, 0);
    let mut late_at_l0 = Vec::new();
    for i in 0..50u64 {
        let (k, l) = ((i % 6) as u32, ((i / 6) % 3) as u32);
        let env = small_env(k, l, 100 + i);
        let mut sim = Simulation::reset(env.clone(), i).unwrap();
        let mut ctl = PlannedController::new(PlannedConfig::pp());
        ctl.plan(&sim, far()).unwrap();
        let planned = ctl.solution.clone().unwrap();
        while !sim.is_terminated() {
            let a = ctl.act(&sim, far()).unwrap();
            deadlocks += sim.step(&a).unwrap().new_deadlocks.len();
        }
        breakdowns += sim.trace().steps.iter().map(|s| s.malfunctions.len()).sum::<usize>();
        agents += env.agents.len();
        arrived += sim.agents().iter().filter(|a| a.is_done()).count();
        if l == 0 {
            for (j, p) in planned.paths.iter().enumerate() {
                if p.as_ref().map(|p| p.arrival) != sim.agent(j).arrived_at {
                    late_at_l0.push((i, j));
                }
            }
        }
    }
    let rate = arrived as f64 / agents as f64;
    let ok = deadlocks == 0 && rate >= 0.95 && late_at_l0.is_empty() && started.elapsed() < Duration::from_secs(600);
    verdict(
        6,
        "MCP robustness",
        ok,
        format!("50 instances, {breakdowns} breakdowns, {deadlocks} deadlocks, {arrived}/{agents} arrived ({:.1}%), off-plan at l=0 {late_at_l0:?}", rate * 100.0),
        started,
    );
}

/// Single track with a siding; agent 0 breaks down on the main line while
/// agent 1 comes the other way and can wait or take the siding.
fn detour_instance(width: u32) -> Arc<Environment> {
    let grid = fixtures::passing_loop(width, 5);
    let agents = vec![spec(c(1, 2), E, c(3, width - 1)), spec(c(3, 0), N, c(1, width - 1))];
    Arc::new(Environment::new(grid, agents, 2))
}

fn travel_with_breakdown(env: &Arc<Environment>, cfg: PlannedConfig, at: u32, duration: u32) -> Option<u32> {
    let mut sim = Simulation::reset(env.clone(), 0).unwrap();
    sim.disable_malfunctions();
    let mut ctl = PlannedController::new(cfg);
    ctl.plan(&sim, far()).unwrap();
    while !sim.is_terminated() {
        if sim.t() == at {
            sim.inject_malfunction(0, duration);
        }
        let a = ctl.act(&sim, far()).unwrap();
        sim.step(&a).unwrap();
    }
    sim.all_done().then(|| sim.agents().iter().map(|a| a.arrived_at.unwrap()).sum())
}

#[test]
fn c07_partial_replanning_benefit() {
    let started = Instant::now();
    let mut rows = Vec::new();
    for i in 0..10u32 {
        let width = 8 + i;
        let env = detour_instance(width);
        let duration = 15 + 3 * i;
        let pure = travel_with_breakdown(&env, PlannedConfig { partial_replan: false, ..PlannedConfig::pp() }, 2, duration);
        let partial = travel_with_breakdown(&env, PlannedConfig::pp(), 2, duration);
        rows.push((width, pure, partial));
    }
    let finished = rows.iter().all(|r| r.1.is_some() && r.2.is_some());
    let never_worse = rows.iter().all(|r| r.2 <= r.1);
    let strictly = rows.iter().filter(|r| r.2 < r.1).count();
    let ok = finished && never_worse && strictly >= 5 && started.elapsed() < Duration::from_secs(300);
    verdict(
        7,
        "partial replanning benefit",
        ok,
        format!("{strictly}/10 strictly better, (width, pure, partial) {rows:?}"),
        started,
    );
}

#[test]
fn c08_traffic_lights_exclusive() {
    let started = Instant::now();
    let (mut violations, mut steps, mut finished) = (0, 0, 0);
    for seed in 0..50u64 {
        let env = small_env((seed % 8) as u32, (seed % 3) as u32, 500 + seed);
        let mut sim = Simulation::reset(env.clone(), seed).unwrap();
        let mut ctl = HeuristicController::new();
        ctl.plan(&sim, far()).unwrap();
        while !sim.is_terminated() {
            let a = ctl.act(&sim, far()).unwrap();
            sim.step(&a).unwrap();
        }
        finished += usize::from(sim.all_done());
        let clusters = find_clusters(&env.grid);
        for step in sim.trace().steps {
            steps += 1;
            for cl in &clusters {
                let inside = step.positions.iter().flatten().filter(|s| cl.cells.contains(&s.cell)).count();
                violations += usize::from(inside > 1);
            }
        }
    }
    verdict(
        8,
        "traffic lights exclusive",
        violations == 0,
        format!("50 episodes ({finished} finished), {steps} steps scanned, {violations} violations"),
        started,
    );
}

#[test]
fn c09_priority_coloring() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut improper, mut too_many, mut star_fail) = (0, 0, 0);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=46);
        let density: f64 = rng.gen_range(0.0..0.5);
        let mut g = ConflictGraph::new(n + 4);
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(density) {
                    g.add_edge(a, b);
                }
            }
        }
        // a separate K_{1,3} with a random vertex as its centre
        let centre = n + rng.gen_range(0..4);
        for leaf in (n..n + 4).filter(|&v| v != centre) {
            g.add_edge(centre, leaf);
        }
        let p = assign_priorities(&g);
        improper += usize::from(!p.is_proper(&g));
        too_many += usize::from(p.n_levels() as usize > g.max_degree() + 1);
        star_fail += usize::from(p.level(centre) != 0);
    }
    let ok = improper == 0 && too_many == 0 && star_fail == 0;
    verdict(
        9,
        "priority coloring",
        ok,
        format!("1000 graphs, improper {improper}, over maxdeg+1 {too_many}, star centre not 0: {star_fail}"),
        started,
    );
}

#[test]
fn c10_observation_contracts() {
    let started = Instant::now();
    let sets = [FeatureSet::Minimal4, FeatureSet::Standard7, FeatureSet::Rich11];
    let (mut junction_ok, mut junction_masked, mut junction_bad) = (0, 0, 0);
    let (mut tree_queries, mut tree_bad) = (0, 0);
    for seed in 0..6u64 {
        let env = small_env(2 + seed as u32, 1, 700 + seed);
        let ctx = PlanningContext::new(env.clone());
        let handles = PriorityHandles::from_seed(env.agents.len(), seed);
        let mut sim = Simulation::reset(env.clone(), seed).unwrap();
        let mut ctl = PlannedController::new(PlannedConfig::pp());
        ctl.plan(&sim, far()).unwrap();
        while !sim.is_terminated() && sim.t() < 60 {
            for i in 0..sim.n_agents() {
                match junction_observe(&ctx, &sim, i) {
                    Ok(j) if j.flatten().len() == 27 => junction_ok += 1,
                    Ok(_) => junction_bad += 1,
                    Err(_) => junction_masked += 1,
                }
                if sim.agent(i).is_done() {
                    continue;
                }
                for depth in 1..=3 {
                    for fs in sets {
                        tree_queries += 1;
                        let want = ((1usize << (depth + 1)) - 2, fs.len());
                        match tree_observe(&ctx, &sim, i, depth, fs, &handles) {
                            Ok(t) if t.shape() == want && t.flatten().len() == want.0 * want.1 => {}
                            _ => tree_bad += 1,
                        }
                    }
                }
            }
            let a = ctl.act(&sim, far()).unwrap();
            sim.step(&a).unwrap();
        }
    }

    let cfg = ShapedRewardConfig::default();
    // (Δd, deadlocked, finished, expected)
    let table: [(f64, bool, bool, f64); 20] = [
        (1.0, false, false, 0.01),
        (0.0, true, false, -5.0),
        (1.0, false, true, 10.01),
        (0.0, false, false, 0.0),
        (-1.0, false, false, -0.01),
        (2.0, false, false, 0.02),
        (1.0, true, false, -4.99),
        (-1.0, true, false, -5.01),
        (0.0, false, true, 10.0),
        (3.0, false, true, 10.03),
        (0.0, true, true, 5.0),
        (-2.0, false, false, -0.02),
        (5.0, false, false, 0.05),
        (10.0, false, false, 0.1),
        (-3.0, true, false, -5.03),
        (0.5, false, false, 0.005),
        (4.0, false, true, 10.04),
        (-4.0, false, false, -0.04),
        (1.0, true, true, 5.01),
        (7.0, true, false, -4.93),
    ];
    let reward_bad: Vec<usize> = table
        .iter()
        .enumerate()
        .filter(|(_, &(d, dead, fin, want))| (shaped_terms(d, dead, fin, !fin, false, &cfg) - want).abs() > 1e-12)
        .map(|(k, _)| k)
        .collect();
    let ok = junction_bad == 0 && junction_ok > 0 && tree_bad == 0 && reward_bad.is_empty();
    verdict(
        10,
        "observation contracts",
        ok,
        format!(
            "junction {junction_ok} of length 27, {junction_masked} masked, {junction_bad} wrong; tree {tree_queries} queries, {tree_bad} wrong shape; reward rows off {reward_bad:?}"
        ),
        started,
    );
}

fn dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn c11_determinism() {
    let started = Instant::now();
    let mut differing = Vec::new();
    let tmp = tempfile::tempdir().unwrap();
    let controllers = [
        ControllerSpec::PpSippMcp,
        ControllerSpec::LnsMcp(LnsConfig { iterations: 30, ..LnsConfig::default() }),
        ControllerSpec::MaskedHeuristic,
    ];
    for (k, ctl) in controllers.into_iter().enumerate() {
        let run = |tag: &str| {
            let dir = tmp.path().join(format!("{k}_{tag}"));
            let cfg = EvalConfig {
                controller: ctl.clone(),
                tests: 0..3,
                limits: Limits::unlimited(),
                seeds: SeedSpec::Base(42),
                trace_dir: Some(dir.clone()),
            };
            let report = run_evaluation(&cfg).unwrap();
            (serde_json::to_string(&report.without_timing()).unwrap(), dir_bytes(&dir))
        };
        let (a, b) = (run("a"), run("b"));
        if a.0 != b.0 {
            differing.push(format!("{ctl} report"));
        }
        if a.1.len() != 30 || a.1 != b.1 {
            differing.push(format!("{ctl} traces"));
        }
    }
    for seed in 0..10 {
        if scripted_episode(seed, false).1.to_jsonl_string() != scripted_episode(seed, false).1.to_jsonl_string() {
            differing.push(format!("scripted episode {seed}"));
        }
    }
    verdict(
        11,
        "determinism",
        differing.is_empty(),
        format!("3 controllers x 30 envs and 10 scripted episodes, differing {differing:?}"),
        started,
    );
}

fn env_result(test: u32, timed_out: bool, done: usize, n: usize) -> EnvResult {
    EnvResult { test, timed_out, agents_done: done, n_agents: n, ..Default::default() }
}

#[test]
fn c12_termination_rules() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut nine: Vec<EnvResult> = (0..9).map(|_| env_result(0, true, 0, 1)).collect();
    if check_termination(&nine, false, 1e9) != Verdict::Continue {
        failures.push("9 timeouts stopped");
    }
    nine.push(env_result(0, false, 1, 1));
    if check_termination(&nine, false, 1e9) != Verdict::Continue {
        failures.push("9 timeouts then success stopped");
    }
    let ten: Vec<EnvResult> = (0..10).map(|_| env_result(0, true, 0, 1)).collect();
    if check_termination(&ten, false, 1e9) != Verdict::Stop(StopReason::ConsecutiveTimeouts { count: 10 }) {
        failures.push("10 timeouts did not stop");
    }
    let low: Vec<EnvResult> = (0..10).map(|_| env_result(3, false, 24, 100)).collect();
    match check_termination(&low, true, 1e9) {
        Verdict::Stop(StopReason::LowCompletion { test: 3, fraction }) if (fraction - 0.24).abs() < 1e-12 => {}
        _ => failures.push("24% completion did not stop"),
    }
    let enough: Vec<EnvResult> = (0..10).map(|_| env_result(3, false, 25, 100)).collect();
    if check_termination(&enough, true, 1e9) != Verdict::Continue {
        failures.push("25% completion stopped");
    }
    if check_termination(&enough, false, 0.0) != Verdict::Stop(StopReason::BudgetExhausted) {
        failures.push("exhausted budget did not stop");
    }
    // end to end: a controller that never answers times out in every env
    let cfg = EvalConfig {
        controller: ControllerSpec::External("sleep 30".into()),
        tests: 0..3,
        limits: Limits { planning_secs: 0.05, workers: 1, ..Limits::desk() },
        seeds: SeedSpec::Base(0),
        trace_dir: None,
    };
    let report = run_evaluation(&cfg).unwrap();
    if report.envs.len() != 10 || report.termination != Some(StopReason::ConsecutiveTimeouts { count: 10 }) || report.total_score != 0.0 {
        failures.push("silent controller was not stopped after 10 envs");
    }
    verdict(12, "termination rules", failures.is_empty(), format!("failures {failures:?}"), started);
}
