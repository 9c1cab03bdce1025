use super::direction::Direction;
use super::transition::{TransitionCode, Transform};
use crate::error::RailError;
use serde::{Deserialize, Serialize};

/// Grid coordinate. Row-major, origin top-left, north decreases the row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: u32,
    pub col: u32,
}

impl Cell {
    pub const fn new(row: u32, col: u32) -> Cell {
        Cell { row, col }
    }
}

/// A train position: the cell plus the heading it entered with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    pub cell: Cell,
    pub heading: Direction,
}

impl State {
    pub const fn new(cell: Cell, heading: Direction) -> State {
        State { cell, heading }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridJson", into = "GridJson")]
pub struct RailGrid {
    width: u32,
    height: u32,
    cells: Vec<TransitionCode>,
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    width: u32,
    height: u32,
    cells: Vec<u16>,
}

impl TryFrom<GridJson> for RailGrid {
    type Error = RailError;
    fn try_from(g: GridJson) -> Result<Self, Self::Error> {
        let cells = g
            .cells
            .into_iter()
            .map(TransitionCode::new)
            .collect::<Result<Vec<_>, _>>()?;
        RailGrid::from_codes(g.width, g.height, cells)
    }
}

impl From<RailGrid> for GridJson {
    fn from(g: RailGrid) -> Self {
        GridJson {
            width: g.width,
            height: g.height,
            cells: g.cells.iter().map(|c| c.bits()).collect(),
        }
    }
}

impl RailGrid {
    pub fn new(width: u32, height: u32) -> Result<Self, RailError> {
        if width == 0 || height == 0 {
            return Err(RailError::EmptyGrid { width, height });
        }
        Ok(RailGrid {
            width,
            height,
            cells: vec![TransitionCode::EMPTY; (width * height) as usize],
        })
    }

    pub fn from_codes(width: u32, height: u32, cells: Vec<TransitionCode>) -> Result<Self, RailError> {
        if width == 0 || height == 0 {
            return Err(RailError::EmptyGrid { width, height });
        }
        let expected = (width as usize) * (height as usize);
        if cells.len() != expected {
            return Err(RailError::CellCount { expected, got: cells.len() });
        }
        Ok(RailGrid { width, height, cells })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    #[inline]
    pub fn index(&self, cell: Cell) -> usize {
        (cell.row * self.width + cell.col) as usize
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index as u32 / self.width, index as u32 % self.width)
    }

    #[inline]
    pub fn code(&self, cell: Cell) -> TransitionCode {
        if self.contains(cell) {
            self.cells[self.index(cell)]
        } else {
            TransitionCode::EMPTY
        }
    }

    pub fn set(&mut self, cell: Cell, code: TransitionCode) -> Result<(), RailError> {
        if !self.contains(cell) {
            return Err(RailError::OutOfBounds(cell));
        }
        let i = self.index(cell);
        self.cells[i] = code;
        Ok(())
    }

    pub fn codes(&self) -> &[TransitionCode] {
        &self.cells
    }

    pub fn neighbor(&self, cell: Cell, d: Direction) -> Option<Cell> {
        let (dr, dc) = d.delta();
        let r = cell.row as i64 + dr;
        let c = cell.col as i64 + dc;
        if r < 0 || c < 0 || r >= self.height as i64 || c >= self.width as i64 {
            None
        } else {
            Some(Cell::new(r as u32, c as u32))
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cells.len()).map(move |i| self.cell_at(i))
    }

    pub fn rail_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells().filter(move |&c| self.code(c).is_rail())
    }

    /// States a train can hold in this cell (headings with at least one exit).
    pub fn states_at(&self, cell: Cell) -> impl Iterator<Item = State> + '_ {
        let code = self.code(cell);
        Direction::ALL
            .into_iter()
            .filter(move |&h| !code.exits(h).is_empty())
            .map(move |h| State::new(cell, h))
    }

    /// Successor states following the cell's transitions; exits leaving the
    /// grid are dropped.
    pub fn successors(&self, s: State) -> impl Iterator<Item = State> + '_ {
        self.code(s.cell)
            .exits(s.heading)
            .iter()
            .filter_map(move |e| self.neighbor(s.cell, e).map(|n| State::new(n, e)))
    }

    /// True if `s` is a rail state and its cell allows entry with `s.heading`.
    pub fn is_state(&self, s: State) -> bool {
        !self.code(s.cell).exits(s.heading).is_empty()
    }

    /// Maps a cell through a whole-grid transform.
    pub fn transform_cell(&self, cell: Cell, t: Transform) -> Cell {
        let (h, w) = (self.height, self.width);
        match t {
            Transform::Rot90 => Cell::new(cell.col, h - 1 - cell.row),
            Transform::Rot180 => Cell::new(h - 1 - cell.row, w - 1 - cell.col),
            Transform::Rot270 => Cell::new(w - 1 - cell.col, cell.row),
            Transform::MirrorH => Cell::new(cell.row, w - 1 - cell.col),
            Transform::MirrorV => Cell::new(h - 1 - cell.row, cell.col),
        }
    }

    /// Transformed copy of the whole grid; codes are transformed consistently.
    pub fn transform(&self, t: Transform) -> RailGrid {
        let (nw, nh) = match t {
            Transform::Rot90 | Transform::Rot270 => (self.height, self.width),
            _ => (self.width, self.height),
        };
        let mut out = RailGrid::new(nw, nh).expect("non-empty");
        for cell in self.cells() {
            let target = self.transform_cell(cell, t);
            let i = out.index(target);
            out.cells[i] = self.code(cell).transform(t);
        }
        out
    }

    /// Lays a physical track piece joining sides `a` and `b` of `cell`.
    pub fn add_piece(&mut self, cell: Cell, a: Direction, b: Direction) -> Result<(), RailError> {
        let code = self.code(cell).with_piece(a, b)?;
        self.set(cell, code)
    }

    /// Lays a polyline of cells as track. Consecutive cells must be 4-adjacent;
    /// the first and last cells are anchors and receive no piece.
    pub fn add_track(&mut self, path: &[Cell]) -> Result<(), RailError> {
        let dir_between = |a: Cell, b: Cell| -> Direction {
            Direction::ALL
                .into_iter()
                .find(|&d| self.neighbor(a, d) == Some(b))
                .expect("track cells must be adjacent")
        };
        let mut pieces = Vec::new();
        for i in 0..path.len() {
            let prev = (i > 0).then(|| dir_between(path[i], path[i - 1]));
            let next = (i + 1 < path.len()).then(|| dir_between(path[i], path[i + 1]));
            if let (Some(p), Some(n)) = (prev, next) {
                pieces.push((path[i], p, n));
            }
        }
        for (c, a, b) in pieces {
            self.add_piece(c, a, b)?;
        }
        Ok(())
    }

    /// Lays a closed loop through the given cells (last connects to first).
    pub fn add_loop(&mut self, path: &[Cell]) -> Result<(), RailError> {
        let mut closed = Vec::with_capacity(path.len() + 2);
        closed.push(path[path.len() - 1]);
        closed.extend_from_slice(path);
        closed.push(path[0]);
        self.add_track(&closed)
    }

    /// Parses the textual grid JSON.
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
