//! Per-cell transition codes.
//!
//! A code is 16 flags, one per (entry heading, exit heading) pair. Flags are
//! stored entry-major with the first pair in the most significant bit:
//!
//! ```text
//! bit 15 - (4 * entry + exit),  N = 0, E = 1, S = 2, W = 3
//!
//!   15 14 13 12 | 11 10  9  8 |  7  6  5  4 |  3  2  1  0
//!   NN NE NS NW | EN EE ES EW | SN SE SS SW | WN WE WS WW
//! ```
//!
//! The entry is the heading the train has when it enters the cell, the exit is
//! the heading it leaves with (the side of the cell it leaves through). A
//! vertical straight rail is therefore `NN | SS = 0x8020`.

use super::direction::{DirSet, Direction};
use crate::error::RailError;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub struct TransitionCode(u16);

/// Geometric transform of a cell (or grid). Rotations are clockwise;
/// `MirrorH` swaps east and west, `MirrorV` swaps north and south.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transform {
    Rot90,
    Rot180,
    Rot270,
    MirrorH,
    MirrorV,
}

impl Transform {
    pub const ALL: [Transform; 5] = [
        Transform::Rot90,
        Transform::Rot180,
        Transform::Rot270,
        Transform::MirrorH,
        Transform::MirrorV,
    ];

    pub fn apply(self, d: Direction) -> Direction {
        match self {
            Transform::Rot90 => d.right(),
            Transform::Rot180 => d.opposite(),
            Transform::Rot270 => d.left(),
            Transform::MirrorH => match d {
                Direction::E => Direction::W,
                Direction::W => Direction::E,
                other => other,
            },
            Transform::MirrorV => match d {
                Direction::N => Direction::S,
                Direction::S => Direction::N,
                other => other,
            },
        }
    }
}

#[inline]
fn bit(entry: Direction, exit: Direction) -> u16 {
    1 << (15 - (4 * entry.index() + exit.index()))
}

impl TransitionCode {
    pub const EMPTY: TransitionCode = TransitionCode(0);

    /// Accepts any encoding whose per-entry exit sets have at most two members.
    pub fn new(bits: u16) -> Result<Self, RailError> {
        let code = TransitionCode(bits);
        for entry in Direction::ALL {
            if code.exits(entry).len() > 2 {
                return Err(RailError::TooManyExits { bits, entry });
            }
        }
        Ok(code)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn is_rail(self) -> bool {
        self.0 != 0
    }

    pub fn has(self, entry: Direction, exit: Direction) -> bool {
        self.0 & bit(entry, exit) != 0
    }

    /// Exit headings available to a train entering with `entry`.
    pub fn exits(self, entry: Direction) -> DirSet {
        let nibble = (self.0 >> (12 - 4 * entry.index())) & 0xF;
        // nibble bit 3 is exit N, bit 0 is exit W
        let mut s = DirSet::EMPTY;
        for exit in Direction::ALL {
            if nibble & (1 << (3 - exit.index())) != 0 {
                s.insert(exit);
            }
        }
        s
    }

    /// Total number of (entry, exit) pairs.
    pub fn transition_count(self) -> u32 {
        self.0.count_ones()
    }

    /// True if some entry offers a choice between two exits.
    pub fn is_decision(self) -> bool {
        Direction::ALL.iter().any(|&e| self.exits(e).len() >= 2)
    }

    /// Sides of the cell through which track leaves.
    pub fn connected_sides(self) -> DirSet {
        let mut s = DirSet::EMPTY;
        for entry in Direction::ALL {
            for exit in self.exits(entry).iter() {
                s.insert(exit);
                s.insert(entry.opposite());
            }
        }
        s
    }

    /// Adds a physical track piece joining side `a` to side `b` (both travel
    /// directions). Returns an error if the result would exceed two exits.
    pub fn with_piece(self, a: Direction, b: Direction) -> Result<Self, RailError> {
        let bits = self.0 | bit(a.opposite(), b) | bit(b.opposite(), a);
        TransitionCode::new(bits)
    }

    /// Builds a code from physical pieces.
    pub fn from_pieces(pieces: &[(Direction, Direction)]) -> Result<Self, RailError> {
        pieces
            .iter()
            .try_fold(TransitionCode::EMPTY, |c, &(a, b)| c.with_piece(a, b))
    }

    pub fn from_pairs(pairs: &[(Direction, Direction)]) -> Result<Self, RailError> {
        let bits = pairs.iter().fold(0u16, |acc, &(i, o)| acc | bit(i, o));
        TransitionCode::new(bits)
    }

    pub fn pairs(self) -> impl Iterator<Item = (Direction, Direction)> {
        Direction::ALL.into_iter().flat_map(move |i| {
            Direction::ALL
                .into_iter()
                .filter(move |&o| self.has(i, o))
                .map(move |o| (i, o))
        })
    }

    pub fn transform(self, t: Transform) -> TransitionCode {
        let bits = self
            .pairs()
            .fold(0u16, |acc, (i, o)| acc | bit(t.apply(i), t.apply(o)));
        TransitionCode(bits)
    }
}

impl TryFrom<u16> for TransitionCode {
    type Error = RailError;
    fn try_from(v: u16) -> Result<Self, Self::Error> {
        TransitionCode::new(v)
    }
}

impl From<TransitionCode> for u16 {
    fn from(c: TransitionCode) -> u16 {
        c.0
    }
}
