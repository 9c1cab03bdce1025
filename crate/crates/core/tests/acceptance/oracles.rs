//! Independent reference computations used by the acceptance checks.

use railmapf::rail::{Cell, State};
use railmapf::sim::{EpisodeTrace, Environment};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

/// Per-agent rewards rebuilt from the recorded positions alone: -1 for
/// every step begun unfinished, +1 to everyone on the step that finishes
/// the last agent. An agent is finished once it leaves the grid.
pub fn rewards_from_positions(trace: &EpisodeTrace) -> Vec<i64> {
    let n = trace.n_agents();
    let mut seen = vec![false; n];
    let mut done = vec![false; n];
    let mut rewards = vec![0i64; n];
    for step in &trace.steps {
        for r in rewards.iter_mut().zip(&done).filter(|(_, d)| !**d) {
            *r.0 -= 1;
        }
        for (i, p) in step.positions.iter().enumerate() {
            match p {
                Some(_) => seen[i] = true,
                None if seen[i] => done[i] = true,
                None => {}
            }
        }
        if done.iter().all(|&d| d) {
            for r in rewards.iter_mut() {
                *r += 1;
            }
            break;
        }
    }
    rewards
}

pub fn score_from_rewards(rewards: &[i64], t_max: u32) -> f64 {
    let total: i64 = rewards.iter().sum();
    1.0 + total as f64 / (rewards.len() as f64 * t_max as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Slot {
    Off,
    On(State),
    Done,
}

/// Minimum sum of arrival times over all joint schedules, by Dijkstra on
/// the product of agent states. Agents enter at their origin no earlier
/// than t = 1, may wait anywhere, vanish on reaching their target, and may
/// never share a cell or swap cells in one step.
pub fn joint_optimum(env: &Environment) -> Option<u64> {
    let n = env.agents.len();
    let grid = &env.grid;
    let start = vec![Slot::Off; n];
    let mut best: HashMap<Vec<Slot>, u64> = HashMap::from([(start.clone(), 0)]);
    let mut configs = vec![start];
    let mut heap = BinaryHeap::from([Reverse((0u64, 0usize))]);
    while let Some(Reverse((cost, id))) = heap.pop() {
        let cur = configs[id].clone();
        if best.get(&cur) != Some(&cost) {
            continue;
        }
        if cur.iter().all(|s| *s == Slot::Done) {
            return Some(cost);
        }
        let options: Vec<Vec<Slot>> = cur
            .iter()
            .enumerate()
            .map(|(i, s)| match s {
                Slot::Off => vec![Slot::Off, Slot::On(env.agents[i].start_state())],
                Slot::On(st) => std::iter::once(Slot::On(*st)).chain(grid.successors(*st).map(Slot::On)).collect(),
                Slot::Done => vec![Slot::Done],
            })
            .collect();
        let step_cost = cur.iter().filter(|s| **s != Slot::Done).count() as u64;
        let mut pick = vec![0usize; n];
        loop {
            let next: Vec<Slot> = (0..n).map(|i| options[i][pick[i]]).collect();
            if legal(&cur, &next) {
                let next: Vec<Slot> = next
                    .iter()
                    .enumerate()
                    .map(|(i, s)| match s {
                        Slot::On(st) if st.cell == env.agents[i].target => Slot::Done,
                        s => *s,
                    })
                    .collect();
                let c = cost + step_cost;
                if best.get(&next).is_none_or(|&b| c < b) {
                    best.insert(next.clone(), c);
                    configs.push(next);
                    heap.push(Reverse((c, configs.len() - 1)));
                }
            }
            // odometer over the option lists
            let mut k = 0;
            while k < n {
                pick[k] += 1;
                if pick[k] < options[k].len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
    }
    None
}

fn cell(s: &Slot) -> Option<Cell> {
    match s {
        Slot::On(st) => Some(st.cell),
        _ => None,
    }
}

fn legal(cur: &[Slot], next: &[Slot]) -> bool {
    for a in 0..next.len() {
        let Some(ca) = cell(&next[a]) else { continue };
        for b in a + 1..next.len() {
            let Some(cb) = cell(&next[b]) else { continue };
            if ca == cb {
                return false;
            }
            if let (Some(pa), Some(pb)) = (cell(&cur[a]), cell(&cur[b])) {
                if pa == cb && pb == ca && pa != ca {
                    return false;
                }
            }
        }
    }
    true
}
