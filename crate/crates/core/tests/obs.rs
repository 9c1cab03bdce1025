use approx::assert_abs_diff_eq;
use railmapf::fixtures;
use railmapf::gen::{generate, test_params, GenConfig};
use railmapf::obs::*;
use railmapf::rail::{Cell, Direction, Direction::*, RailGrid, State};
use railmapf::sim::{Action, AgentSpec, Environment, Simulation};
use railmapf::solver::PlanningContext;
use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

fn c(r: u32, col: u32) -> Cell {
    Cell::new(r, col)
}

fn spec(o: Cell, d: Direction, t: Cell) -> AgentSpec {
    AgentSpec { origin: o, direction: d, target: t }
}

fn setup(grid: RailGrid, agents: Vec<AgentSpec>) -> (PlanningContext, Simulation) {
    let env = Arc::new(Environment::new(grid, agents, 2));
    let mut sim = Simulation::reset(env.clone(), 0).unwrap();
    sim.disable_malfunctions();
    (PlanningContext::new(env), sim)
}

/// Steps agent 0 onto the grid and forward `n` times.
fn advance(sim: &mut Simulation, n: usize) {
    for _ in 0..=n {
        sim.step(&[Action::MoveForward]).unwrap();
    }
}

#[test]
fn tree_root_edge_reaches_next_switch() {
    // northbound on the right side; the facing switch for westbound trains is (1, 8)
    let (ctx, mut sim) = setup(fixtures::passing_loop(10, 5), vec![spec(c(3, 9), N, c(4, 5))]);
    advance(&mut sim, 1);
    let h = PriorityHandles::from_seed(1, 0);
    let obs = tree_observe(&ctx, &sim, 0, 1, FeatureSet::Rich11, &h).unwrap();
    assert_eq!(obs.shape(), (2, 11));
    assert_eq!(obs.rows[0][0], 2.0);
    let deeper = tree_observe(&ctx, &sim, 0, 2, FeatureSet::Rich11, &h).unwrap();
    assert_eq!(deeper.shape(), (6, 11));
    assert!(!deeper.is_padding(2) && !deeper.is_padding(3));
    assert!(obs.is_padding(1));
    assert_eq!(obs.rows[1][1], f64::INFINITY);
    assert_eq!(obs.rows[1][2], -1.0);
}

#[test]
fn tree_shape_is_fixed() {
    let env = Arc::new(generate(&test_params(2, 0).unwrap(), &GenConfig::new(4)).unwrap());
    let ctx = PlanningContext::new(env.clone());
    let mut sim = Simulation::reset(env.clone(), 3).unwrap();
    let h = PriorityHandles::from_seed(env.agents.len(), 3);
    for step in 0..40 {
        for depth in 1..=3 {
            for fs in [FeatureSet::Minimal4, FeatureSet::Standard7, FeatureSet::Rich11] {
                for i in 0..env.agents.len() {
                    if let Ok(o) = tree_observe(&ctx, &sim, i, depth, fs, &h) {
                        assert_eq!(o.shape(), (TreeObservation::n_rows(depth), fs.len()), "step {step}");
                        assert_eq!(o.flatten().len(), TreeObservation::n_rows(depth) * fs.len());
                    }
                }
            }
        }
        if sim.is_terminated() {
            break;
        }
        sim.step(&vec![Action::MoveForward; env.agents.len()]).unwrap();
    }
    assert!(tree_observe(&ctx, &sim, 0, 0, FeatureSet::Rich11, &h).is_err());
    assert!(tree_observe(&ctx, &sim, 0, 4, FeatureSet::Rich11, &h).is_err());
}

#[test]
fn tree_json_uses_null_for_unreachable() {
    let (ctx, sim) = setup(fixtures::passing_loop(10, 5), vec![spec(c(1, 5), W, c(4, 5))]);
    let h = PriorityHandles::from_seed(1, 0);
    let obs = tree_observe(&ctx, &sim, 0, 1, FeatureSet::Minimal4, &h).unwrap();
    let js = serde_json::to_string(&obs).unwrap();
    assert!(js.contains("null"));
    assert!(js.contains("\"minimal-4\""));
}

fn bfs_distance(grid: &RailGrid, from: State, target: Cell) -> Option<u32> {
    let mut seen = HashMap::from([(from, 0u32)]);
    let mut q = VecDeque::from([from]);
    while let Some(s) = q.pop_front() {
        let d = seen[&s];
        if s.cell == target {
            return Some(d);
        }
        for n in grid.successors(s) {
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(n) {
                e.insert(d + 1);
                q.push_back(n);
            }
        }
    }
    None
}

#[test]
fn junction_observation_contract() {
    let (ctx, mut sim) = setup(fixtures::passing_loop(10, 5), vec![spec(c(1, 5), W, c(4, 5))]);
    advance(&mut sim, 0);
    // (1,5) is plain track
    assert!(matches!(junction_observe(&ctx, &sim, 0), Err(railmapf::error::ObsError::Masked { .. })));
    sim.step(&[Action::MoveForward]).unwrap();
    sim.step(&[Action::MoveForward]).unwrap();
    sim.step(&[Action::MoveForward]).unwrap();
    // (1,2) is the stopping cell in front of the switch, single exit west
    assert_eq!(sim.agent(0).cell(), Some(c(1, 2)));
    let o = junction_observe(&ctx, &sim, 0).unwrap();
    assert_eq!(o.flatten().len(), 27);
    assert_eq!(o.slots[0][0], -1.0);
    assert_eq!(o.slots[2][0], -1.0);
    assert_eq!(o.slots[1][0], 1.0);
    let succ = State::new(c(1, 1), W);
    assert_eq!(o.slots[1][1], bfs_distance(ctx.grid(), succ, c(4, 5)).unwrap() as f64);
    assert_eq!(o.slots[1][7], 1.0);
    assert_eq!(o.slots[1][2], 0.0);
}

#[test]
fn junction_length_and_oracle_on_generated() {
    let env = Arc::new(generate(&test_params(3, 0).unwrap(), &GenConfig::new(9)).unwrap());
    let ctx = PlanningContext::new(env.clone());
    let mut sim = Simulation::reset(env.clone(), 1).unwrap();
    let jo = JunctionObserver::new(&env.grid);
    let mut queries = 0;
    while !sim.is_terminated() && sim.t() < 120 {
        for i in 0..env.agents.len() {
            if let Ok(o) = jo.observe(&ctx, &sim, i) {
                queries += 1;
                assert_eq!(o.flatten().len(), JUNCTION_SLOTS * JUNCTION_FEATURES);
                let s = sim.agent(i).position.unwrap_or(env.agents[i].start_state());
                for d in env.grid.code(s.cell).exits(s.heading).iter() {
                    let next = State::new(env.grid.neighbor(s.cell, d).unwrap(), d);
                    let want = bfs_distance(&env.grid, next, env.agents[i].target);
                    let found = o.slots.iter().any(|row| row[1] == want.map_or(f64::INFINITY, |x| x as f64));
                    assert!(found);
                }
            }
        }
        sim.step(&vec![Action::MoveLeft; env.agents.len()]).unwrap();
    }
    assert!(queries > 0);
}

#[test]
fn shaped_reward_table() {
    let cfg = ShapedRewardConfig::default();
    // (delta, deadlocked, finished, expected)
    let table: [(f64, bool, bool, f64); 20] = [
        (1.0, false, false, 0.01),
        (0.0, true, false, -5.0),
        (1.0, false, true, 10.01),
        (0.0, false, false, 0.0),
        (-1.0, false, false, -0.01),
        (2.0, false, false, 0.02),
        (-3.0, false, false, -0.03),
        (1.0, true, false, -4.99),
        (-1.0, true, false, -5.01),
        (0.0, false, true, 10.0),
        (-1.0, false, true, 9.99),
        (5.0, false, true, 10.05),
        (0.0, true, true, 5.0),
        (1.0, true, true, 5.01),
        (10.0, false, false, 0.1),
        (100.0, false, false, 1.0),
        (-10.0, true, false, -5.1),
        (3.0, false, false, 0.03),
        (7.0, true, false, -4.93),
        (0.5, false, false, 0.005),
    ];
    for (delta, dead, fin, want) in table {
        assert_abs_diff_eq!(shaped_terms(delta, dead, fin, !fin, false, &cfg), want, epsilon = 1e-12);
    }
    let alt = ShapedRewardConfig::finish_only(0.1, 0.2, 3.0, 1.0);
    assert_abs_diff_eq!(shaped_terms(1.0, false, false, true, true, &alt), -0.3, epsilon = 1e-12);
    assert!(alt.is_finite());
}

#[test]
fn shaped_progress_telescopes() {
    let (ctx, mut sim) = setup(fixtures::ring(8, 5), vec![spec(c(0, 1), E, c(4, 3))]);
    let cfg = ShapedRewardConfig { deadlock_penalty: 0.0, finish_bonus: 0.0, ..Default::default() };
    let initial = agent_distance(&ctx, 0, sim.agent(0)).unwrap();
    let mut total = 0.0;
    while !sim.is_terminated() {
        let prev = sim.clone();
        sim.step(&[Action::MoveForward]).unwrap();
        total += shaped_reward(&ctx, &prev, &sim, 0, &cfg);
    }
    assert!(sim.all_done());
    assert_abs_diff_eq!(total, 0.01 * initial as f64, epsilon = 1e-9);
}

#[test]
fn masked_wrapper_only_asks_at_decisions() {
    let grid = fixtures::passing_loop(10, 5);
    let (_, mut sim) = setup(grid.clone(), vec![spec(c(1, 5), W, c(4, 5)), spec(c(1, 3), E, c(4, 6))]);
    let mut calls = 0;
    let mut policy = MaskedPolicy::new(&grid, |_: &Simulation, _: usize| {
        calls += 1;
        Action::MoveForward
    });
    // off the grid: delegated
    assert_eq!(policy.act(&sim, 0), Action::MoveForward);
    sim.step(&[Action::MoveForward, Action::MoveForward]).unwrap();
    let before = policy.inner_calls;
    // agent 0 at (1,5) westbound: (1,4) free
    assert_eq!(policy.act(&sim, 0), Action::MoveForward);
    assert_eq!(policy.inner_calls, before);
    // agent 1 at (1,3) eastbound: (1,4) free as well, move agent 0 onto it
    sim.step(&[Action::MoveForward, Action::Stop]).unwrap();
    assert_eq!(sim.agent(0).cell(), Some(c(1, 4)));
    // agent 1 now faces an occupied cell; (1,3) is plain track
    assert_eq!(policy.act(&sim, 1), Action::Stop);
    assert_eq!(policy.inner_calls, before);
    drop(policy);
    assert_eq!(calls, 1);
}

#[test]
fn masked_wrapper_delegates_once_at_switch() {
    let grid = fixtures::passing_loop(10, 5);
    let (_, mut sim) = setup(grid.clone(), vec![spec(c(1, 2), W, c(4, 5))]);
    let mut policy = MaskedPolicy::new(&grid, |_: &Simulation, _: usize| Action::MoveLeft);
    sim.step(&[Action::MoveForward]).unwrap();
    let n0 = policy.inner_calls;
    assert_eq!(policy.act(&sim, 0), Action::MoveLeft);
    assert_eq!(policy.inner_calls, n0 + 1);
}

#[test]
fn priority_handles_fixed_per_seed() {
    let a = PriorityHandles::from_seed(50, 11);
    let b = PriorityHandles::from_seed(50, 11);
    assert_eq!(a, b);
    assert!(a.as_slice().iter().all(|&x| (0.0..1.0).contains(&x)));
    assert_ne!(a, PriorityHandles::from_seed(50, 12));
}

#[test]
fn dump_writes_json_lines() {
    let env = Arc::new(generate(&test_params(1, 0).unwrap(), &GenConfig::new(2)).unwrap());
    let ctx = PlanningContext::new(env.clone());
    let sim = Simulation::reset(env.clone(), 0).unwrap();
    let mut out = Vec::new();
    let h = PriorityHandles::from_seed(env.agents.len(), 0);
    dump_observations(&mut out, &ctx, &sim, &h, &JunctionObserver::new(&env.grid), 2, FeatureSet::Standard7).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), env.agents.len());
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("tree").is_some());
    }
}
