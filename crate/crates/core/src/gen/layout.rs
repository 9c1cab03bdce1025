use super::schedule::TestParams;
use crate::error::GenError;
use crate::rail::{validate_grid, Cell, Direction, RailGrid, TransitionCode};
use crate::sim::{validate_agents, AgentSpec, EnvOrigin, Environment, MalfunctionParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    /// Whole-layout retries before giving up.
    pub max_attempts: u32,
    /// Fewest parallel tracks per city; the most is the schedule's limit.
    pub min_tracks: u32,
    /// Placement tries per city within one attempt.
    pub placement_tries: u32,
}

impl GenConfig {
    pub fn new(seed: u64) -> Self {
        GenConfig { seed, ..Default::default() }
    }
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { seed: 0, max_attempts: 64, min_tracks: 2, placement_tries: 400 }
    }
}

/// A city: `tracks` parallel horizontal tracks below row `r0`, spanning
/// columns `c0..=c1` on the top track and narrowing by one column per side
/// for each track below. Every track carries one station at the middle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct City {
    pub r0: u32,
    pub c0: u32,
    pub c1: u32,
    pub tracks: u32,
}

impl City {
    pub fn width_for(tracks: u32) -> u32 {
        2 * tracks + 4
    }

    pub fn west_port(&self) -> Cell {
        Cell::new(self.r0, self.c0)
    }

    pub fn east_port(&self) -> Cell {
        Cell::new(self.r0, self.c1)
    }

    pub fn stations(&self) -> Vec<Cell> {
        let mc = (self.c0 + self.c1) / 2;
        (0..self.tracks).map(|k| Cell::new(self.r0 + k, mc)).collect()
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.row >= self.r0 && c.row < self.r0 + self.tracks && c.col >= self.c0 && c.col <= self.c1
    }

    fn overlaps(&self, o: &City, gap: u32) -> bool {
        let (a_r1, b_r1) = (self.r0 + self.tracks - 1, o.r0 + o.tracks - 1);
        !(a_r1 + gap < o.r0 || b_r1 + gap < self.r0 || self.c1 + gap < o.c0 || o.c1 + gap < self.c0)
    }

    fn clear(&self, g: &mut RailGrid) {
        for k in 0..self.tracks {
            for col in self.c0..=self.c1 {
                // only the city's own cells carry rail here
                let _ = g.set(Cell::new(self.r0 + k, col), TransitionCode::EMPTY);
            }
        }
    }

    fn lay(&self, g: &mut RailGrid) -> Result<(), crate::error::RailError> {
        use Direction::*;
        let (r0, c0, c1) = (self.r0, self.c0, self.c1);
        for k in 0..self.tracks {
            let row = r0 + k;
            let (a, b) = (c0 + k, c1 - k);
            for col in a..=b {
                let cell = Cell::new(row, col);
                if k == 0 {
                    g.add_piece(cell, W, E)?;
                } else if col == a {
                    g.add_piece(cell, N, E)?;
                } else if col == b {
                    g.add_piece(cell, W, N)?;
                } else {
                    g.add_piece(cell, W, E)?;
                }
            }
            if k > 0 {
                g.add_piece(Cell::new(row - 1, a), W, S)?;
                g.add_piece(Cell::new(row - 1, b), S, E)?;
            }
        }
        Ok(())
    }
}

fn place_cities(rng: &mut ChaCha8Rng, p: &TestParams, cfg: &GenConfig) -> Option<Vec<City>> {
    let max_t = p.max_rails_in_city.max(cfg.min_tracks);
    let mut cities: Vec<City> = Vec::with_capacity(p.n_cities as usize);
    for _ in 0..p.n_cities {
        let mut placed = false;
        for _ in 0..cfg.placement_tries {
            let t = rng.gen_range(cfg.min_tracks..=max_t);
            let w = City::width_for(t);
            if p.x_dim < w + 5 || p.y_dim < t + 3 {
                return None;
            }
            let c0 = rng.gen_range(2..=p.x_dim - 3 - (w - 1));
            let r0 = rng.gen_range(1..=p.y_dim - 2 - (t - 1));
            let city = City { r0, c0, c1: c0 + w - 1, tracks: t };
            if cities.iter().all(|o| !city.overlaps(o, 2)) {
                cities.push(city);
                placed = true;
                break;
            }
        }
        if !placed {
            return None;
        }
    }
    Some(cities)
}

/// Ring order by angle around the grid centre.
fn ring_order(cities: &[City], p: &TestParams) -> Vec<usize> {
    let (cy, cx) = (p.y_dim as f64 / 2.0, p.x_dim as f64 / 2.0);
    let mut idx: Vec<usize> = (0..cities.len()).collect();
    let angle = |c: &City| {
        let y = c.r0 as f64 + c.tracks as f64 / 2.0 - cy;
        let x = (c.c0 + c.c1) as f64 / 2.0 - cx;
        y.atan2(x)
    };
    idx.sort_by(|&a, &b| angle(&cities[a]).total_cmp(&angle(&cities[b])).then(a.cmp(&b)));
    idx
}

const TURN_COST: u32 = 2;
const CROSS_COST: u32 = 3;

/// Routes a corridor from the cell east of `from` into `to` from the west.
/// Existing rail may only be crossed at right angles over a straight piece.
fn route(g: &RailGrid, blocked: &[bool], from: Cell, to: Cell) -> Option<Vec<Cell>> {
    use Direction::*;
    let start = g.neighbor(from, E)?;
    let goal_pre = g.neighbor(to, W)?;
    let key = |c: Cell, h: Direction| g.index(c) * 4 + h.index();
    let free = |c: Cell| !blocked[g.index(c)] || c == start || c == goal_pre;
    if !free(start) || g.code(start).is_rail() {
        return None;
    }
    let crossable = |c: Cell, h: Direction| {
        let code = g.code(c);
        let straight_other = if matches!(h, E | W) { (N, S) } else { (E, W) };
        code.transition_count() == 2
            && code.has(straight_other.0, straight_other.0)
            && code.has(straight_other.1, straight_other.1)
    };
    let n = g.cell_count() * 4;
    let mut dist = vec![u32::MAX; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    let s0 = key(start, E);
    dist[s0] = 0;
    heap.push(Reverse((0u32, s0)));
    let mut found = None;
    while let Some(Reverse((d, k))) = heap.pop() {
        if d > dist[k] {
            continue;
        }
        let cell = g.cell_at(k / 4);
        let h = Direction::from_index(k % 4);
        let on_rail = g.code(cell).is_rail();
        if cell == goal_pre && h != W {
            found = Some(k);
            break;
        }
        for e in [h, h.left(), h.right()] {
            if on_rail && e != h {
                continue;
            }
            let Some(nc) = g.neighbor(cell, e) else { continue };
            if !free(nc) {
                continue;
            }
            let mut cost = d + 1 + if e != h { TURN_COST } else { 0 };
            if g.code(nc).is_rail() {
                if !crossable(nc, e) || nc == goal_pre {
                    continue;
                }
                cost += CROSS_COST;
            }
            let nk = key(nc, e);
            if cost < dist[nk] {
                dist[nk] = cost;
                prev[nk] = k;
                heap.push(Reverse((cost, nk)));
            }
        }
    }
    let mut k = found?;
    let mut cells = vec![to];
    loop {
        cells.push(g.cell_at(k / 4));
        if k == s0 {
            break;
        }
        k = prev[k];
    }
    cells.push(from);
    cells.reverse();
    Some(cells)
}

/// Only straight, perpendicular self-crossings are allowed.
fn self_crossing_ok(path: &[Cell]) -> bool {
    let mut seen = std::collections::HashMap::new();
    for i in 1..path.len() - 1 {
        let (a, b, c) = (path[i - 1], path[i], path[i + 1]);
        let horizontal = a.row == b.row && b.row == c.row;
        let vertical = a.col == b.col && b.col == c.col;
        if let Some(prev) = seen.insert(b, (horizontal, vertical)) {
            let ok = (prev.0 && vertical) || (prev.1 && horizontal);
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Lays cities and the ring of corridors. With `max_drops > 0` a city
/// whose inbound corridor cannot be routed is removed instead of failing
/// the attempt.
fn try_layout(rng: &mut ChaCha8Rng, p: &TestParams, cfg: &GenConfig, max_drops: usize) -> Option<(RailGrid, Vec<City>)> {
    let cities = place_cities(rng, p, cfg)?;
    let mut g = RailGrid::new(p.x_dim, p.y_dim).ok()?;
    // city tracks and port approaches; corridors obey the crossing rule instead
    let mut blocked = vec![false; g.cell_count()];
    for city in &cities {
        city.lay(&mut g).ok()?;
        for k in 0..city.tracks {
            for col in city.c0 + k..=city.c1 - k {
                blocked[g.index(Cell::new(city.r0 + k, col))] = true;
            }
        }
        // keep the cells in front of the ports for their own corridors
        for c in [g.neighbor(city.west_port(), Direction::W), g.neighbor(city.east_port(), Direction::E)]
            .into_iter()
            .flatten()
        {
            blocked[g.index(c)] = true;
        }
    }
    let order = ring_order(&cities, p);
    let mut kept = vec![order[0]];
    for j in 1..=order.len() {
        let next = order[j % order.len()];
        let a = &cities[*kept.last().expect("non-empty")];
        let b = &cities[next];
        match route(&g, &blocked, a.east_port(), b.west_port()).filter(|path| self_crossing_ok(path)) {
            Some(path) => {
                g.add_track(&path).ok()?;
                if j < order.len() {
                    kept.push(next);
                }
            }
            None if j < order.len() && j - kept.len() < max_drops => b.clear(&mut g),
            None => return None,
        }
    }
    kept.sort_unstable();
    Some((g, kept.into_iter().map(|i| cities[i]).collect()))
}

fn assign_agents(rng: &mut ChaCha8Rng, cities: &[City], n: u32) -> Vec<AgentSpec> {
    let mut next_origin = vec![0usize; cities.len()];
    let mut next_target = vec![0usize; cities.len()];
    (0..n)
        .map(|_| {
            let a = rng.gen_range(0..cities.len());
            let mut b = rng.gen_range(0..cities.len() - 1);
            if b >= a {
                b += 1;
            }
            let (sa, sb) = (cities[a].stations(), cities[b].stations());
            let origin = sa[next_origin[a] % sa.len()];
            let target = sb[next_target[b] % sb.len()];
            next_origin[a] += 1;
            next_target[b] += 1;
            let direction = if rng.gen_bool(0.5) { Direction::E } else { Direction::W };
            AgentSpec { origin, direction, target }
        })
        .collect()
}

/// Generates a validated environment for the given schedule slot. The
/// result depends only on `(params, config)`.
pub fn generate(params: &TestParams, config: &GenConfig) -> Result<Environment, GenError> {
    generate_with_cities(params, config).map(|(env, _)| env)
}

/// As [`generate`], also returning the city blocks.
///
/// Large grids sometimes box in a port. When every attempt fails, a second
/// round of attempts may drop up to a tenth of the cities.
pub fn generate_with_cities(params: &TestParams, config: &GenConfig) -> Result<(Environment, Vec<City>), GenError> {
    let drops = params.n_cities as usize / 10;
    for (attempt, max_drops) in (0..config.max_attempts).map(|a| (a, 0)).chain((0..config.max_attempts).map(|a| (a, drops))) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(attempt as u64);
        let Some((grid, cities)) = try_layout(&mut rng, params, config, max_drops) else { continue };
        if cities.len() < 2 || !validate_grid(&grid).is_clean() {
            continue;
        }
        let agents = assign_agents(&mut rng, &cities, params.n_agents);
        let mut env = Environment::new(grid, agents, params.n_cities);
        env.malfunction = MalfunctionParams {
            rate: params.malfunction_rate(),
            min_duration: params.min_malfunction_duration,
            max_duration: params.max_malfunction_duration,
        };
        env.origin = Some(EnvOrigin { test: params.test, env: params.env, seed: config.seed });
        if validate_agents(&env).is_ok() {
            return Ok((env, cities));
        }
    }
    Err(GenError::Placement { test: params.test, seed: config.seed, attempts: config.max_attempts })
}
