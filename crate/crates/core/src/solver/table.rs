use super::path::TimedPath;
use crate::rail::{Cell, RailGrid};
use std::collections::{BTreeSet, HashSet};

/// Inclusive time interval `[start, end]`.
pub type Interval = (u32, u32);

/// Reserved cell occupancy plus directed moves, from which safe intervals
/// are derived on demand.
#[derive(Clone, Debug)]
pub struct SafeIntervalTable {
    width: u32,
    occupied: Vec<BTreeSet<u32>>,
    forever: Vec<u32>,
    moves: HashSet<(usize, usize, u32)>,
}

impl SafeIntervalTable {
    pub fn new(grid: &RailGrid) -> Self {
        let n = grid.cell_count();
        SafeIntervalTable {
            width: grid.width(),
            occupied: vec![BTreeSet::new(); n],
            forever: vec![u32::MAX; n],
            moves: HashSet::new(),
        }
    }

    #[inline]
    fn idx(&self, c: Cell) -> usize {
        (c.row * self.width + c.col) as usize
    }

    pub fn is_free(&self, c: Cell, t: u32) -> bool {
        let i = self.idx(c);
        t < self.forever[i] && !self.occupied[i].contains(&t)
    }

    /// True if a reserved agent moves `from -> to` arriving at `t + 1`.
    pub fn has_move(&self, from: Cell, to: Cell, t: u32) -> bool {
        self.moves.contains(&(self.idx(from), self.idx(to), t))
    }

    /// A move `from -> to` arriving at `t + 1` would swap with a reservation.
    pub fn swaps(&self, from: Cell, to: Cell, t: u32) -> bool {
        self.has_move(to, from, t)
    }

    pub fn reserve_cell(&mut self, c: Cell, t: u32) {
        let i = self.idx(c);
        self.occupied[i].insert(t);
    }

    /// Blocks `c` from time `from` onwards (a train that never leaves).
    pub fn reserve_forever(&mut self, c: Cell, from: u32) {
        let i = self.idx(c);
        self.forever[i] = self.forever[i].min(from);
    }

    pub fn clear_forever(&mut self, c: Cell) {
        let i = self.idx(c);
        self.forever[i] = u32::MAX;
    }

    pub fn reserve_path(&mut self, p: &TimedPath) {
        for (i, pair) in p.states.windows(2).enumerate() {
            let (a, b) = (pair[0].cell, pair[1].cell);
            if a != b {
                let key = (self.idx(a), self.idx(b), p.departure + i as u32);
                self.moves.insert(key);
            }
        }
        for (t, s) in p.timed_states() {
            self.reserve_cell(s.cell, t);
        }
    }

    pub fn release_path(&mut self, p: &TimedPath) {
        for (i, pair) in p.states.windows(2).enumerate() {
            let (a, b) = (pair[0].cell, pair[1].cell);
            if a != b {
                let key = (self.idx(a), self.idx(b), p.departure + i as u32);
                self.moves.remove(&key);
            }
        }
        for (t, s) in p.timed_states() {
            let i = self.idx(s.cell);
            self.occupied[i].remove(&t);
        }
    }

    /// Maximal free intervals of `c` within `[0, horizon]`, sorted.
    pub fn safe_intervals(&self, c: Cell, horizon: u32) -> Vec<Interval> {
        let i = self.idx(c);
        let end = horizon.min(self.forever[i].saturating_sub(1));
        if self.forever[i] == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut start = 0u32;
        for &t in self.occupied[i].range(..=end) {
            if t > start {
                out.push((start, t - 1));
            }
            start = t + 1;
        }
        if start <= end {
            out.push((start, end));
        }
        out
    }

    /// The safe interval containing `t`, if `c` is free at `t`.
    pub fn interval_at(&self, c: Cell, t: u32, horizon: u32) -> Option<Interval> {
        self.safe_intervals(c, horizon).into_iter().find(|&(a, b)| a <= t && t <= b)
    }
}
