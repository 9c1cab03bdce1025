use super::context::PlanningContext;
use super::path::Solution;
use super::pp::{prioritized_plan_into, table_for};
use crate::rail::Cell;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    Random,
    Congestion,
    Delay,
}

impl Neighborhood {
    pub const ALL: [Neighborhood; 3] = [Neighborhood::Random, Neighborhood::Congestion, Neighborhood::Delay];
}

/// Adaptive roulette over neighbourhood strategies. Each weight decays
/// towards the strategy's recent improvements.
#[derive(Clone, Debug)]
pub struct NeighborhoodPicker {
    weights: [f64; 3],
    gamma: f64,
}

impl NeighborhoodPicker {
    const FLOOR: f64 = 0.05;

    pub fn new(gamma: f64) -> Self {
        NeighborhoodPicker { weights: [1.0; 3], gamma }
    }

    pub fn weights(&self) -> [f64; 3] {
        self.weights
    }

    pub fn pick<R: Rng>(&self, rng: &mut R) -> Neighborhood {
        let total: f64 = self.weights.iter().sum();
        let mut x = rng.gen::<f64>() * total;
        for (k, w) in self.weights.iter().enumerate() {
            if x < *w {
                return Neighborhood::ALL[k];
            }
            x -= w;
        }
        Neighborhood::Delay
    }

    /// `gain` is the cost reduction per replanned agent (0 if rejected).
    pub fn update(&mut self, n: Neighborhood, gain: f64) {
        let k = Neighborhood::ALL.iter().position(|&x| x == n).expect("known");
        let w = (1.0 - self.gamma) * self.weights[k] + self.gamma * gain;
        self.weights[k] = w.max(Self::FLOOR);
    }
}

fn random_fill<R: Rng>(set: &mut BTreeSet<usize>, n: usize, size: usize, rng: &mut R) {
    if set.len() >= size {
        return;
    }
    let mut rest: Vec<usize> = (0..n).filter(|i| !set.contains(i)).collect();
    rest.shuffle(rng);
    set.extend(rest.into_iter().take(size - set.len()));
}

fn cells_of(ctx: &PlanningContext, sol: &Solution, i: usize) -> Vec<Cell> {
    match &sol.paths[i] {
        Some(p) => p.cell_sequence(),
        None => ctx
            .dist(i)
            .shortest_path(ctx.grid(), ctx.agent(i).start_state())
            .map(|v| v.into_iter().map(|s| s.cell).collect())
            .unwrap_or_default(),
    }
}

/// Picks up to `size` agents to replan.
pub fn select_neighborhood<R: Rng>(
    ctx: &PlanningContext,
    sol: &Solution,
    strategy: Neighborhood,
    rng: &mut R,
    size: usize,
) -> Vec<usize> {
    let n = ctx.n_agents();
    let size = size.min(n);
    let mut set = BTreeSet::new();
    match strategy {
        Neighborhood::Random => {}
        Neighborhood::Congestion => {
            let mut users: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
            for i in 0..n {
                for c in cells_of(ctx, sol, i) {
                    users.entry(c).or_default().push(i);
                }
            }
            let mut hot: Vec<(&Cell, &Vec<usize>)> = users.iter().filter(|(_, v)| v.len() >= 2).collect();
            hot.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
            if !hot.is_empty() {
                let first = rng.gen_range(0..hot.len().min(5));
                for (_, agents) in hot.iter().skip(first) {
                    let mut a = (*agents).clone();
                    a.shuffle(rng);
                    for i in a {
                        if set.len() < size {
                            set.insert(i);
                        }
                    }
                    if set.len() >= size {
                        break;
                    }
                }
            }
        }
        Neighborhood::Delay => {
            let delay = |i: usize| -> u64 {
                match (&sol.paths[i], ctx.free_flow_arrival(i)) {
                    (Some(p), Some(ff)) => (p.arrival - ff.min(p.arrival)) as u64,
                    (None, _) => ctx.horizon() as u64,
                    _ => 0,
                }
            };
            let delays: Vec<u64> = (0..n).map(delay).collect();
            let total: u64 = delays.iter().sum();
            if total > 0 {
                let mut x = rng.gen_range(0..total);
                let mut pick = 0;
                for (i, &d) in delays.iter().enumerate() {
                    if x < d {
                        pick = i;
                        break;
                    }
                    x -= d;
                }
                set.insert(pick);
                let mine: BTreeSet<Cell> = cells_of(ctx, sol, pick).into_iter().collect();
                let mut partners: Vec<usize> = (0..n)
                    .filter(|&j| j != pick && cells_of(ctx, sol, j).iter().any(|c| mine.contains(c)))
                    .collect();
                partners.shuffle(rng);
                for j in partners.into_iter().take(size.saturating_sub(1)) {
                    set.insert(j);
                }
            }
        }
    }
    random_fill(&mut set, n, size, rng);
    set.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LnsConfig {
    pub neighborhood_size: usize,
    pub iterations: u32,
    /// Wall-clock cap in seconds; `None` runs all iterations.
    pub time_limit_secs: Option<f64>,
    pub workers: usize,
    pub seed: u64,
    /// Roulette reaction factor.
    pub gamma: f64,
}

impl Default for LnsConfig {
    fn default() -> Self {
        LnsConfig { neighborhood_size: 8, iterations: 200, time_limit_secs: None, workers: 4, seed: 0, gamma: 0.1 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LnsReport {
    /// Best cost after each round, starting with the input cost.
    pub trajectory: Vec<u64>,
    pub iterations: u32,
    pub improvements: u32,
    pub elapsed_secs: f64,
    pub strategy_counts: BTreeMap<String, u32>,
}

impl LnsReport {
    pub fn secs_per_iteration(&self) -> Option<f64> {
        (self.iterations > 0).then(|| self.elapsed_secs / self.iterations as f64)
    }
}

struct Attempt {
    strategy: Neighborhood,
    size: usize,
    result: Solution,
}

fn attempt(ctx: &PlanningContext, best: &Solution, picker: &NeighborhoodPicker, cfg: &LnsConfig, stream: u64) -> Attempt {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let strategy = picker.pick(&mut rng);
    let mut nb = select_neighborhood(ctx, best, strategy, &mut rng, cfg.neighborhood_size);
    nb.shuffle(&mut rng);
    let mut table = table_for(ctx, best, &nb);
    let result = prioritized_plan_into(ctx, &nb, &mut table, best.clone());
    Attempt { strategy, size: nb.len(), result }
}

/// Large neighbourhood search. Runs synchronous rounds of `workers`
/// attempts from the current best; the best strict improvement of a round
/// is adopted (lowest worker on ties), so results depend only on the seed.
pub fn lns_improve(
    ctx: &PlanningContext,
    initial: Solution,
    cfg: &LnsConfig,
    deadline: Option<Instant>,
) -> (Solution, LnsReport) {
    let start = Instant::now();
    let deadline = match (deadline, cfg.time_limit_secs) {
        (Some(d), Some(s)) => Some(d.min(start + Duration::from_secs_f64(s))),
        (d, None) => d,
        (None, Some(s)) => Some(start + Duration::from_secs_f64(s)),
    };
    let mut best = initial;
    let mut picker = NeighborhoodPicker::new(cfg.gamma);
    let mut report = LnsReport { trajectory: vec![best.cost()], ..Default::default() };
    let workers = cfg.workers.max(1);
    let mut round = 0u64;
    while report.iterations < cfg.iterations && ctx.n_agents() > 0 {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let k = workers.min((cfg.iterations - report.iterations) as usize);
        let streams: Vec<u64> = (0..k as u64).map(|w| round * workers as u64 + w).collect();
        let attempts: Vec<Attempt> = if k == 1 {
            vec![attempt(ctx, &best, &picker, cfg, streams[0])]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = streams
                    .iter()
                    .map(|&st| {
                        let (best, picker) = (&best, &picker);
                        s.spawn(move || attempt(ctx, best, picker, cfg, st))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("lns worker")).collect()
            })
        };
        report.iterations += k as u32;
        let mut winner: Option<usize> = None;
        for (w, a) in attempts.iter().enumerate() {
            *report.strategy_counts.entry(format!("{:?}", a.strategy).to_lowercase()).or_default() += 1;
            let (f0, c0) = best.rank();
            let (f1, c1) = a.result.rank();
            let gain = if (f1, c1) < (f0, c0) {
                (f0 as f64 - f1 as f64) * ctx.horizon() as f64 + (c0 as f64 - c1 as f64)
            } else {
                0.0
            };
            picker.update(a.strategy, gain / a.size.max(1) as f64);
            if a.result.rank() < best.rank() && winner.is_none_or(|v| a.result.rank() < attempts[v].result.rank()) {
                winner = Some(w);
            }
        }
        if let Some(w) = winner {
            best = attempts.into_iter().nth(w).expect("winner").result;
            report.improvements += 1;
        }
        report.trajectory.push(best.cost());
        round += 1;
    }
    report.elapsed_secs = start.elapsed().as_secs_f64();
    (best, report)
}

/// Observed planning speed, used to size later LNS runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetHistory {
    pub initial_secs: f64,
    /// (environment size, seconds per iteration)
    pub samples: Vec<(usize, f64)>,
}

impl BudgetHistory {
    /// Assumed cost before any measurement: 0.1 ms per agent per iteration.
    pub const DEFAULT_SECS_PER_AGENT: f64 = 1e-4;

    pub fn new(initial_secs: f64) -> Self {
        BudgetHistory { initial_secs, samples: Vec::new() }
    }

    pub fn record(&mut self, env_size: usize, secs_per_iter: f64) {
        if env_size > 0 && secs_per_iter.is_finite() && secs_per_iter > 0.0 {
            self.samples.push((env_size, secs_per_iter));
        }
    }

    /// Expected seconds per iteration at `env_size`, scaling linearly.
    pub fn est_iter_cost(&self, env_size: usize) -> f64 {
        let per_agent = if self.samples.is_empty() {
            Self::DEFAULT_SECS_PER_AGENT
        } else {
            self.samples.iter().map(|&(n, s)| s / n as f64).sum::<f64>() / self.samples.len() as f64
        };
        per_agent * env_size.max(1) as f64
    }
}

/// Iteration limit for the next environment. The fair share of the
/// remaining time is scaled by a temperature that cools from 1 to 0.5 as
/// the budget drains.
pub fn budget_policy(env_size: usize, remaining_secs: f64, envs_left: usize, history: &BudgetHistory) -> u32 {
    if remaining_secs <= 0.0 {
        return 0;
    }
    let share = remaining_secs / envs_left.max(1) as f64;
    let frac = if history.initial_secs > 0.0 { remaining_secs / history.initial_secs } else { 1.0 };
    let temp = (0.5 + 0.5 * frac).clamp(0.5, 1.0);
    let limit = (share / history.est_iter_cost(env_size) * temp).floor();
    limit.min(u32::MAX as f64) as u32
}
