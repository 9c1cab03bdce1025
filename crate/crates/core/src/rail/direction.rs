use serde::{Deserialize, Serialize};
use std::fmt;

/// Compass heading of a train, and the side of a cell a track leaves through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Direction {
    N = 0,
    E = 1,
    S = 2,
    W = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::N, Direction::E, Direction::S, Direction::W];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Direction {
        Self::ALL[i & 3]
    }

    #[inline]
    pub fn opposite(self) -> Direction {
        Self::from_index(self.index() + 2)
    }

    /// Heading after a left turn.
    #[inline]
    pub fn left(self) -> Direction {
        Self::from_index(self.index() + 3)
    }

    /// Heading after a right turn.
    #[inline]
    pub fn right(self) -> Direction {
        Self::from_index(self.index() + 1)
    }

    /// Row/column offset of one step in this direction. North decreases the row.
    #[inline]
    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::N => (-1, 0),
            Direction::E => (0, 1),
            Direction::S => (1, 0),
            Direction::W => (0, -1),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Direction::N => "N",
            Direction::E => "E",
            Direction::S => "S",
            Direction::W => "W",
        };
        f.write_str(c)
    }
}

/// Small set of directions, bit `d` set for direction index `d`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct DirSet(u8);

impl DirSet {
    pub const EMPTY: DirSet = DirSet(0);

    pub fn from_bits(bits: u8) -> DirSet {
        DirSet(bits & 0xF)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn insert(&mut self, d: Direction) {
        self.0 |= 1 << d.index();
    }

    pub fn contains(self, d: Direction) -> bool {
        self.0 & (1 << d.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Iterates in N, E, S, W order.
    pub fn iter(self) -> impl Iterator<Item = Direction> {
        Direction::ALL.into_iter().filter(move |d| self.contains(*d))
    }

    /// The single member, if the set has exactly one.
    pub fn single(self) -> Option<Direction> {
        if self.len() == 1 {
            self.iter().next()
        } else {
            None
        }
    }
}

impl FromIterator<Direction> for DirSet {
    fn from_iter<T: IntoIterator<Item = Direction>>(iter: T) -> Self {
        let mut s = DirSet::EMPTY;
        for d in iter {
            s.insert(d);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opposite_is_involution() {
        for d in Direction::ALL {
            assert_eq!(d.opposite().opposite(), d);
            assert_ne!(d.opposite(), d);
            assert_eq!(d.left().right(), d);
        }
    }

    #[test]
    fn turns_relative_to_heading() {
        assert_eq!(Direction::N.left(), Direction::W);
        assert_eq!(Direction::N.right(), Direction::E);
        assert_eq!(Direction::W.left(), Direction::S);
    }

    #[test]
    fn dirset_iterates_in_order() {
        let s: DirSet = [Direction::W, Direction::N].into_iter().collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![Direction::N, Direction::W]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.single(), None);
    }
}
