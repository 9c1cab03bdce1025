use railmapf::exec::*;
use railmapf::fixtures;
use railmapf::gen::{generate, test_params, GenConfig};
use railmapf::rail::{Cell, Direction, Direction::*};
use railmapf::sim::{AgentSpec, Environment, MalfunctionParams, Phase, Simulation};
use railmapf::solver::{check_solution, PlanningContext};
use std::sync::Arc;
use std::time::{Duration, Instant};

fn c(r: u32, col: u32) -> Cell {
    Cell::new(r, col)
}

fn spec(o: Cell, d: Direction, t: Cell) -> AgentSpec {
    AgentSpec { origin: o, direction: d, target: t }
}

fn far() -> Instant {
    Instant::now() + Duration::from_secs(3600)
}

/// Runs `ctl` to termination, injecting `(t, agent, duration)` breakdowns.
fn run(sim: &mut Simulation, ctl: &mut dyn Controller, inject: &[(u32, usize, u32)]) {
    ctl.plan(sim, far()).unwrap();
    while !sim.is_terminated() {
        for &(t, i, d) in inject {
            if t == sim.t() {
                sim.inject_malfunction(i, d);
            }
        }
        let actions = ctl.act(sim, far()).unwrap();
        let out = sim.step(&actions).unwrap();
        assert!(out.new_deadlocks.is_empty(), "deadlock at t={}", out.t);
    }
}

fn travel(sim: &Simulation) -> u32 {
    sim.agents().iter().map(|a| a.arrived_at.unwrap_or(sim.t_max())).sum()
}

#[test]
fn execution_matches_plan_without_breakdowns() {
    for k in 0..4 {
        let params = test_params(k, 0).unwrap();
        let env = Arc::new(generate(&params, &GenConfig::new(7 + k as u64)).unwrap());
        let mut sim = Simulation::reset(env.clone(), 1).unwrap();
        let mut ctl = PlannedController::new(PlannedConfig::pp());
        ctl.plan(&sim, far()).unwrap();
        let sol = ctl.solution.clone().unwrap();
        assert!(check_solution(&env, &sol).is_empty());
        while !sim.is_terminated() {
            let a = ctl.act(&sim, far()).unwrap();
            sim.step(&a).unwrap();
            for (i, p) in sol.paths.iter().enumerate() {
                let Some(p) = p else { continue };
                let got = sim.agent(i);
                if sim.t() < p.arrival {
                    assert_eq!(got.position, p.state_at(sim.t()), "k={k} agent {i} t={}", sim.t());
                }
            }
        }
        for (i, p) in sol.paths.iter().enumerate() {
            if let Some(p) = p {
                assert_eq!(sim.agent(i).arrived_at, Some(p.arrival), "k={k} agent {i}");
            }
        }
    }
}

#[test]
fn follower_waits_for_broken_leader() {
    // both eastbound on the top side of a ring, leader breaks down in front
    let grid = fixtures::ring(12, 4);
    let env = Arc::new(Environment::new(grid, vec![spec(c(0, 3), E, c(2, 11)), spec(c(0, 1), E, c(3, 6))], 2));
    let mut sim = Simulation::reset(env, 0).unwrap();
    sim.disable_malfunctions();
    let mut ctl = PlannedController::new(PlannedConfig { partial_replan: false, ..PlannedConfig::pp() });
    run(&mut sim, &mut ctl, &[(3, 0, 20)]);
    assert!(sim.all_done());
    assert!(sim.agent(1).arrived_at.unwrap() > sim.agent(0).arrived_at.unwrap() - 10);
}

#[test]
fn random_breakdowns_never_deadlock() {
    for seed in 0..8u64 {
        let k = (seed % 4) as u32;
        let mut params = test_params(k, 2).unwrap();
        params.n_agents = params.n_agents.max(4);
        let mut env = generate(&params, &GenConfig::new(seed)).unwrap();
        env.malfunction = MalfunctionParams { rate: 0.02, min_duration: 5, max_duration: 30 };
        let env = Arc::new(env);
        let mut sim = Simulation::reset(env.clone(), seed).unwrap();
        sim.set_step_limit(2 * env.t_max());
        let mut ctl = PlannedController::new(PlannedConfig::pp());
        run(&mut sim, &mut ctl, &[]);
        let planned = ctl.solution.as_ref().unwrap().planned();
        let done = sim.agents().iter().filter(|a| a.phase == Phase::Done).count();
        assert_eq!(done, planned, "seed {seed}");
        assert!(sim.deadlocked().is_empty());
    }
}

/// Leader on the main line, follower behind it able to take the siding.
fn detour_instance(width: u32) -> Arc<Environment> {
    let grid = fixtures::passing_loop(width, 5);
    Arc::new(Environment::new(
        grid,
        vec![spec(c(1, 2), E, c(3, width - 1)), spec(c(3, 0), N, c(1, width - 1))],
        2,
    ))
}

#[test]
fn partial_replan_takes_the_siding() {
    let env = detour_instance(12);
    let mut pure = Simulation::reset(env.clone(), 0).unwrap();
    pure.disable_malfunctions();
    let mut partial = pure.clone();
    run(&mut pure, &mut PlannedController::new(PlannedConfig { partial_replan: false, ..PlannedConfig::pp() }), &[(2, 0, 30)]);
    let mut ctl = PlannedController::new(PlannedConfig::pp());
    run(&mut partial, &mut ctl, &[(2, 0, 30)]);
    assert!(pure.all_done() && partial.all_done());
    assert!(ctl.replans >= 1);
    assert!(travel(&partial) < travel(&pure), "partial {} pure {}", travel(&partial), travel(&pure));
}

#[test]
fn zero_deadline_keeps_executor() {
    let env = detour_instance(10);
    let sim = Simulation::reset(env.clone(), 0).unwrap();
    let mut ctl = PlannedController::new(PlannedConfig::pp());
    ctl.plan(&sim, far()).unwrap();
    let exec = ctl.executor().unwrap().clone();
    let ctx = PlanningContext::new(env);
    let (next, report) = partial_replan(&ctx, &sim, &exec, 0, Instant::now() - Duration::from_millis(1));
    assert_eq!(next.paths(), exec.paths());
    assert!(report.affected.is_empty() && !report.rebased);
}

#[test]
fn visit_order_sorted_by_time() {
    let env = Arc::new(generate(&test_params(2, 0).unwrap(), &GenConfig::new(3)).unwrap());
    let sim = Simulation::reset(env.clone(), 0).unwrap();
    let mut ctl = PlannedController::new(PlannedConfig::pp());
    ctl.plan(&sim, far()).unwrap();
    let order = ctl.executor().unwrap().order().clone();
    for cell in env.grid.rail_cells() {
        let q = order.queue(cell);
        let times: Vec<u32> = q.iter().map(|&(i, v)| order.visits(i)[v].planned).collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]), "{cell:?}");
    }
}

#[test]
fn lazy_agents_are_planned_later() {
    let env = Arc::new(generate(&test_params(3, 0).unwrap(), &GenConfig::new(5)).unwrap());
    let mut sim = Simulation::reset(env.clone(), 0).unwrap();
    let cfg = PlannedConfig { lazy_threshold: Some(2), ..PlannedConfig::pp() };
    let mut ctl = PlannedController::new(cfg);
    run(&mut sim, &mut ctl, &[]);
    assert!(sim.all_done(), "done {}/{}", sim.agents().iter().filter(|a| a.is_done()).count(), env.agents.len());
}

#[test]
fn conflict_graph_cases() {
    let a = Intent { visits: vec![(c(0, 0), 1), (c(0, 1), 2), (c(0, 2), 3)] };
    let b = Intent { visits: vec![(c(5, 0), 1), (c(5, 1), 2)] };
    assert!(build_conflict_graph(&[Some(a.clone()), Some(b)], CONFLICT_WINDOW).edges().is_empty());
    let head_on = Intent { visits: vec![(c(0, 2), 1), (c(0, 1), 2), (c(0, 0), 3)] };
    let g = build_conflict_graph(&[Some(a.clone()), Some(head_on)], CONFLICT_WINDOW);
    assert_eq!(g.edges(), vec![(0, 1)]);
    let late = Intent { visits: vec![(c(0, 1), 200)] };
    assert!(build_conflict_graph(&[Some(a), Some(late)], CONFLICT_WINDOW).edges().is_empty());
    let j = c(3, 3);
    let tri: Vec<Option<Intent>> = (0..3).map(|k| Some(Intent { visits: vec![(j, 10 + k)] })).collect();
    assert_eq!(build_conflict_graph(&tri, CONFLICT_WINDOW).edges(), vec![(0, 1), (0, 2), (1, 2)]);
}

#[test]
fn coloring_cases() {
    let mut star = ConflictGraph::new(4);
    for leaf in [0, 1, 3] {
        star.add_edge(2, leaf);
    }
    let p = assign_priorities(&star);
    assert_eq!(p.levels, vec![1, 1, 0, 1]);
    assert_eq!(assign_priorities(&ConflictGraph::new(3)).levels, vec![0, 0, 0]);
    let mut tri = ConflictGraph::new(3);
    tri.add_edge(0, 1);
    tri.add_edge(1, 2);
    tri.add_edge(0, 2);
    assert_eq!(assign_priorities(&tri).levels, vec![0, 1, 2]);
}

#[test]
fn gate_thresholds() {
    let mut gate = DepartureGate::new(20, 20, 100);
    let cands: Vec<GateCandidate> = (0..3)
        .map(|agent| GateCandidate { agent, features: GateFeatures { dist_ratio: 0.3, ..Default::default() }, queued: false })
        .collect();
    assert!((gate.threshold(0) - 0.92).abs() < 1e-12);
    assert!((gate.threshold(50) - 0.5).abs() < 1e-12);
    assert!(gate.threshold(10) >= gate.threshold(11));
    gate.schedule = ThresholdSchedule::constant(1.0);
    assert!(gate.allowed(&cands, 0, 0).is_empty());
    gate.schedule = ThresholdSchedule::constant(0.0);
    assert_eq!(gate.allowed(&cands, 0, 0), vec![0, 1, 2]);
    assert!(gate.allowed(&cands, gate.soft_cap, 0).is_empty());
    let mut queued = cands.clone();
    queued[1].queued = true;
    assert_eq!(gate.allowed(&queued, 0, 0), vec![0, 2]);
}

#[test]
fn lights_keep_clusters_exclusive() {
    for seed in 0..10u64 {
        let params = test_params((seed % 4) as u32, 1).unwrap();
        let env = Arc::new(generate(&params, &GenConfig::new(seed)).unwrap());
        let mut sim = Simulation::reset(env.clone(), seed).unwrap();
        let mut ctl = HeuristicController::new();
        ctl.plan(&sim, far()).unwrap();
        let clusters = ctl.lights().unwrap().clusters().to_vec();
        while !sim.is_terminated() {
            let a = ctl.act(&sim, far()).unwrap();
            sim.step(&a).unwrap();
            for cl in &clusters {
                let n = cl.cells.iter().filter(|&&c| sim.occupant(c).is_some()).count();
                assert!(n <= 1, "seed {seed} t={}", sim.t());
            }
        }
    }
}

#[test]
fn heuristic_finishes_single_agent() {
    let env = Arc::new(generate(&test_params(0, 0).unwrap(), &GenConfig::new(1)).unwrap());
    let mut sim = Simulation::reset(env, 0).unwrap();
    let mut ctl = HeuristicController::new();
    run(&mut sim, &mut ctl, &[]);
    assert!(sim.all_done());
    assert!(sim.score() > 0.0);
}

#[test]
fn head_on_guard_blocks_opposite_stretch() {
    let mut g = railmapf::rail::RailGrid::new(8, 1).unwrap();
    g.add_track(&(0..8).map(|col| c(0, col)).collect::<Vec<_>>()).unwrap();
    let east = HeadOnGuard::stretch(&g, None, railmapf::rail::State::new(c(0, 1), E), c(0, 6));
    assert_eq!(east.len(), 5);
    assert_eq!(line_from(&g, railmapf::rail::State::new(c(0, 2), E), c(0, 4)).len(), 2);
    let mut guard = HeadOnGuard::default();
    guard.add(0, &east);
    let west = HeadOnGuard::stretch(&g, None, railmapf::rail::State::new(c(0, 6), W), c(0, 1));
    assert!(guard.opposed(1, &west));
    assert!(!guard.opposed(0, &west));
    let follow = HeadOnGuard::stretch(&g, None, railmapf::rail::State::new(c(0, 2), E), c(0, 6));
    assert!(!guard.opposed(1, &follow));
}

#[test]
fn heuristic_avoids_head_on_deadlocks() {
    let env = Arc::new(generate(&test_params(4, 1).unwrap(), &GenConfig::new(504)).unwrap());
    let mut sim = Simulation::reset(env, 4).unwrap();
    let mut ctl = HeuristicController::new();
    run(&mut sim, &mut ctl, &[]);
    assert!(sim.all_done());
}
