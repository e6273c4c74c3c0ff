//! Geometry of the segment `{0, ..., N}` and of the closed triangle
//! `{(x, y) : 0 <= x <= y <= N}` on which two-point functions live.
//!
//! The triangle is split into the open part `T_N` (`1 <= x <= y <= N-1`)
//! and the absorbing boundary `{x = 0} ∪ {y = N}`. Points are enumerated
//! row-major: by `x` first, then `y` from `x` to `N`.

use crate::error::{Error, Result};

/// Class of a lattice point relative to the triangle. Exactly one class
/// applies to every `(x, y)` in `Z²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointClass {
    Interior,
    UpperDiagonal,
    Diagonal,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Geometry {
    n: usize,
    // offset[x] = index of (x, x) in the closed triangle
    offset: Vec<usize>,
    // same, restricted to the open triangle; offset_open[x] for x in 1..N
    offset_open: Vec<usize>,
}

impl Geometry {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidSize(n));
        }
        let mut offset = Vec::with_capacity(n + 2);
        let mut acc = 0;
        for x in 0..=n + 1 {
            offset.push(acc);
            acc += (n + 1).saturating_sub(x);
        }
        let mut offset_open = vec![0; n + 1];
        let mut acc = 0;
        for x in 1..=n {
            offset_open[x] = acc;
            acc += n.saturating_sub(x);
        }
        Ok(Geometry { n, offset, offset_open })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of points of the closed triangle, `(N+1)(N+2)/2`.
    pub fn len(&self) -> usize {
        (self.n + 1) * (self.n + 2) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `|T_N| = N(N-1)/2`.
    pub fn open_len(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    pub fn boundary_len(&self) -> usize {
        2 * self.n + 1
    }

    /// Bulk sites `1..=N-1`.
    pub fn bulk(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n - 1
    }

    pub fn index(&self, x: usize, y: usize) -> Option<usize> {
        if x <= y && y <= self.n {
            Some(self.offset[x] + (y - x))
        } else {
            None
        }
    }

    pub fn point(&self, i: usize) -> Option<(usize, usize)> {
        if i >= self.len() {
            return None;
        }
        // offsets are strictly increasing
        let x = self.offset.partition_point(|&o| o <= i) - 1;
        Some((x, x + (i - self.offset[x])))
    }

    /// Index within the open triangle `T_N` (the unknowns of every solve).
    pub fn open_index(&self, x: usize, y: usize) -> Option<usize> {
        if x >= 1 && x <= y && y < self.n {
            Some(self.offset_open[x] + (y - x))
        } else {
            None
        }
    }

    pub fn open_point(&self, k: usize) -> Option<(usize, usize)> {
        if k >= self.open_len() {
            return None;
        }
        let x = self.offset_open[1..].partition_point(|&o| o <= k);
        Some((x, x + (k - self.offset_open[x])))
    }

    pub fn classify(&self, x: i64, y: i64) -> PointClass {
        let n = self.n as i64;
        if x < 0 || y > n || x > y {
            PointClass::Outside
        } else if x == 0 || y == n {
            PointClass::Boundary
        } else if x == y {
            PointClass::Diagonal
        } else if y == x + 1 {
            PointClass::UpperDiagonal
        } else {
            PointClass::Interior
        }
    }

    pub fn is_boundary(&self, x: usize, y: usize) -> bool {
        self.classify(x as i64, y as i64) == PointClass::Boundary
    }

    pub fn is_diagonal(&self, x: usize, y: usize) -> bool {
        self.classify(x as i64, y as i64) == PointClass::Diagonal
    }

    pub fn is_upper_diagonal(&self, x: usize, y: usize) -> bool {
        self.classify(x as i64, y as i64) == PointClass::UpperDiagonal
    }

    /// All points of the closed triangle in index order.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..=self.n).flat_map(move |x| (x..=self.n).map(move |y| (x, y)))
    }

    /// Points of `T_N` in open-index order.
    pub fn open_points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.n).flat_map(move |x| (x..self.n).map(move |y| (x, y)))
    }

    pub fn boundary_points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.points().filter(move |&(x, y)| x == 0 || y == self.n)
    }

    pub fn diagonal(&self) -> impl Iterator<Item = (usize, usize)> {
        (1..self.n).map(|x| (x, x))
    }

    pub fn upper_diagonal(&self) -> impl Iterator<Item = (usize, usize)> {
        (1..self.n - 1).map(|x| (x, x + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_sizes() {
        assert_eq!(Geometry::new(2), Err(Error::InvalidSize(2)));
        assert!(Geometry::new(3).is_ok());
    }

    #[test]
    fn smallest_lattice() {
        let g = Geometry::new(3).unwrap();
        assert_eq!(g.bulk().count(), 2);
        let t: Vec<_> = g.open_points().collect();
        assert_eq!(t, vec![(1, 1), (1, 2), (2, 2)]);
        assert_eq!(g.upper_diagonal().collect::<Vec<_>>(), vec![(1, 2)]);
    }

    #[test]
    fn counts_n4() {
        let g = Geometry::new(4).unwrap();
        assert_eq!(g.open_len(), 6);
        assert_eq!(g.upper_diagonal().count(), 2);
        assert_eq!(g.boundary_points().count(), 9);
    }

    #[test]
    fn round_trip_n8() {
        let g = Geometry::new(8).unwrap();
        assert_eq!(g.open_len(), 28);
        assert_eq!(g.len(), 28 + g.boundary_len());
        let mut seen = 0;
        for (i, (x, y)) in g.points().enumerate() {
            assert_eq!(g.index(x, y), Some(i));
            assert_eq!(g.point(i), Some((x, y)));
            seen += 1;
        }
        assert_eq!(seen, g.len());
        for (k, (x, y)) in g.open_points().enumerate() {
            assert_eq!(g.open_index(x, y), Some(k));
            assert_eq!(g.open_point(k), Some((x, y)));
        }
        assert_eq!(g.point(g.len()), None);
    }

    #[test]
    fn classify_examples() {
        let g = Geometry::new(4).unwrap();
        assert_eq!(g.classify(1, 2), PointClass::UpperDiagonal);
        assert_eq!(g.classify(0, 3), PointClass::Boundary);
        assert_eq!(g.classify(2, 1), PointClass::Outside);
        assert_eq!(g.classify(2, 2), PointClass::Diagonal);
        assert_eq!(g.classify(1, 3), PointClass::Interior);
        assert_eq!(g.classify(3, 4), PointClass::Boundary);
        assert_eq!(g.classify(0, 5), PointClass::Outside);
    }
}
