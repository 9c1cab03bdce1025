use crate::rail::{Cell, RailGrid, State};
use crate::sim::Simulation;
use std::collections::HashMap;

/// A directed step between neighbouring cells.
pub type Link = (Cell, Cell);

/// True when the train has a choice of exits at `s`.
pub fn is_choice(grid: &RailGrid, s: State) -> bool {
    grid.code(s.cell).exits(s.heading).len() >= 2
}

/// Links a train will traverse from `s` without a choice: forward along
/// unique exits until a facing switch or `target`.
pub fn line_from(grid: &RailGrid, s: State, target: Cell) -> Vec<Link> {
    let mut links = Vec::new();
    let mut cur = s;
    let limit = grid.cell_count() * 4;
    while cur.cell != target && links.len() < limit {
        let Some(d) = grid.code(cur.cell).exits(cur.heading).single() else { break };
        let Some(n) = grid.neighbor(cur.cell, d) else { break };
        links.push((cur.cell, n));
        cur = State::new(n, d);
    }
    links
}

fn arrival(grid: &RailGrid, s: State) -> Option<Link> {
    grid.neighbor(s.cell, s.heading.opposite()).map(|p| (p, s.cell))
}

/// Keeps trains from committing to a stretch of track that another train
/// is already travelling the other way. Each train on the grid owns the
/// link it arrived by and, unless it stands at a switch, every link up to
/// its next switch. A train at a switch or waiting to depart may start a
/// new stretch only if none of its links is owned in reverse.
#[derive(Default)]
pub struct HeadOnGuard {
    owned: HashMap<Link, Vec<usize>>,
}

impl HeadOnGuard {
    pub fn new(sim: &Simulation) -> Self {
        let grid = sim.grid();
        let mut g = HeadOnGuard::default();
        for (i, a) in sim.agents().iter().enumerate() {
            let Some(s) = a.position else { continue };
            let mut links: Vec<Link> = arrival(grid, s).into_iter().collect();
            if !is_choice(grid, s) {
                links.extend(line_from(grid, s, sim.env().agents[i].target));
            }
            g.add(i, &links);
        }
        g
    }

    pub fn add(&mut self, agent: usize, links: &[Link]) {
        for &l in links {
            self.owned.entry(l).or_default().push(agent);
        }
    }

    /// True when some other train owns one of `links` in reverse.
    pub fn opposed(&self, agent: usize, links: &[Link]) -> bool {
        links
            .iter()
            .any(|&(a, b)| self.owned.get(&(b, a)).is_some_and(|o| o.iter().any(|&j| j != agent)))
    }

    /// Links for `agent` moving from `from` (None when departing) into `next`.
    pub fn stretch(grid: &RailGrid, from: Option<State>, next: State, target: Cell) -> Vec<Link> {
        let mut links: Vec<Link> = from.map(|s| (s.cell, next.cell)).into_iter().collect();
        links.extend(line_from(grid, next, target));
        links
    }
}
