//! Small hand-built rail networks for tests, examples and benchmarks.

use crate::rail::{Cell, RailGrid};

fn c(row: u32, col: u32) -> Cell {
    Cell::new(row, col)
}

/// Border cells of a `width` x `height` rectangle, clockwise from the
/// top-left corner.
pub fn ring_cells(top: u32, left: u32, width: u32, height: u32) -> Vec<Cell> {
    let (bottom, right) = (top + height - 1, left + width - 1);
    let mut ring = Vec::new();
    for col in left..=right {
        ring.push(c(top, col));
    }
    for row in top + 1..=bottom {
        ring.push(c(row, right));
    }
    for col in (left..right).rev() {
        ring.push(c(bottom, col));
    }
    for row in (top + 1..bottom).rev() {
        ring.push(c(row, left));
    }
    ring
}

/// A plain loop around the border of the grid.
pub fn ring(width: u32, height: u32) -> RailGrid {
    let mut g = RailGrid::new(width, height).expect("non-empty");
    g.add_loop(&ring_cells(0, 0, width, height)).expect("ring is simple");
    g
}

/// A loop on rows 1..=height-1 with a siding parallel to its top side:
/// switches at `(1, 1)` and `(1, width - 2)`, siding on row 2.
pub fn passing_loop(width: u32, height: u32) -> RailGrid {
    assert!(width >= 5 && height >= 5);
    let mut g = RailGrid::new(width, height).expect("non-empty");
    g.add_loop(&ring_cells(1, 0, width, height - 1)).expect("ring");
    let right = width - 2;
    let mut siding = vec![c(1, 0), c(1, 1)];
    for col in 1..=right {
        siding.push(c(2, col));
    }
    siding.push(c(1, right));
    siding.push(c(1, right + 1));
    g.add_track(&siding).expect("siding");
    g
}

/// The 7x5 passing loop.
pub fn siding_loop() -> RailGrid {
    passing_loop(7, 5)
}
