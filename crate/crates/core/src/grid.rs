//! Hypergrids and lattice points.
//!
//! A grid `A_r^d` is the set of integer points `p` with `0 <= p_i <= r_i - 1`.
//! Its boundary consists of the points with some coordinate at `0` or
//! `r_i - 1`. The unit cube `K_p` incident to `p` collects the up-to-`2^d`
//! grid points whose coordinates differ from `p` by at most one upwards.

use alloc::vec::Vec;
use core::fmt;

/// A lattice point. Coordinates are unsigned; points are only meaningful
/// relative to a [`GridBounds`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridPoint(pub Vec<u64>);

impl GridPoint {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coord(&self, i: usize) -> u64 {
        self.0[i]
    }
}

impl fmt::Debug for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Construct a point from coordinates.
pub fn pt(coords: &[u64]) -> GridPoint {
    GridPoint(coords.to_vec())
}

/// Side lengths `r` of a grid, plus the derived per-coordinate encoding
/// widths. Coordinate `i` is encoded with `ceil(log2(r_i))` bits, big-endian;
/// the looser `sum(ceil(log2(r_i + 1)))` bit count is kept as metadata only.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GridBounds {
    r: Vec<u64>,
    widths: Vec<usize>,
    offsets: Vec<usize>,
    total_bits: usize,
}

fn ceil_log2(x: u64) -> usize {
    debug_assert!(x >= 1);
    (64 - (x - 1).leading_zeros()) as usize
}

impl GridBounds {
    /// Bounds for side lengths `r`; every `r_i` must be at least 1.
    pub fn new(r: &[u64]) -> Result<Self, GridError> {
        if r.is_empty() {
            return Err(GridError::EmptyBounds);
        }
        if r.iter().any(|&x| x == 0) {
            return Err(GridError::ZeroSide);
        }
        let widths: Vec<usize> = r.iter().map(|&x| ceil_log2(x)).collect();
        let mut offsets = Vec::with_capacity(r.len());
        let mut acc = 0;
        for &w in &widths {
            offsets.push(acc);
            acc += w;
        }
        Ok(GridBounds { r: r.to_vec(), widths, offsets, total_bits: acc })
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    pub fn side(&self, i: usize) -> u64 {
        self.r[i]
    }

    pub fn sides(&self) -> &[u64] {
        &self.r
    }

    /// Bits used to encode coordinate `i`.
    pub fn width(&self, i: usize) -> usize {
        self.widths[i]
    }

    /// First input-bit index of coordinate `i` in the concatenated encoding.
    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    /// Total number of encoding bits, `sum(ceil(log2(r_i)))`.
    pub fn encoding_bits(&self) -> usize {
        self.total_bits
    }

    /// The `sum(ceil(log2(r_i + 1)))` bit count; metadata only, not the
    /// encoding actually used.
    pub fn declared_bits(&self) -> usize {
        self.r.iter().map(|&x| ceil_log2(x + 1)).sum()
    }

    /// Number of lattice points, saturating at `u64::MAX`.
    pub fn point_count(&self) -> u64 {
        let mut acc: u64 = 1;
        for &x in &self.r {
            acc = acc.saturating_mul(x);
        }
        acc
    }

    pub fn contains(&self, p: &GridPoint) -> bool {
        p.dim() == self.dim() && p.0.iter().zip(&self.r).all(|(&c, &x)| c < x)
    }

    /// Whether `p` lies on the grid boundary: some coordinate at 0 or `r_i - 1`.
    pub fn on_boundary(&self, p: &GridPoint) -> bool {
        debug_assert!(self.contains(p));
        p.0.iter().zip(&self.r).any(|(&c, &x)| c == 0 || c == x - 1)
    }

    /// `max{i | p_i = 0}`, 1-based, if any coordinate is zero.
    pub fn max_zero_index(&self, p: &GridPoint) -> Option<usize> {
        (1..=p.dim()).rev().find(|&i| p.coord(i - 1) == 0)
    }

    /// Big-endian concatenated encoding of `p`, coordinate 1 first.
    pub fn encode(&self, p: &GridPoint) -> Result<Vec<bool>, GridError> {
        if p.dim() != self.dim() {
            return Err(GridError::DimensionMismatch { expected: self.dim(), got: p.dim() });
        }
        if !self.contains(p) {
            return Err(GridError::OutOfRange { point: p.clone() });
        }
        let mut bits = Vec::with_capacity(self.total_bits);
        for (i, &c) in p.0.iter().enumerate() {
            let w = self.widths[i];
            for j in (0..w).rev() {
                bits.push((c >> j) & 1 == 1);
            }
        }
        Ok(bits)
    }

    /// Iterate over every lattice point in row-major order (last coordinate
    /// fastest). Only sensible for small grids.
    pub fn iter_points(&self) -> GridIter<'_> {
        GridIter { bounds: self, next: Some(GridPoint(alloc::vec![0; self.dim()])) }
    }

    /// Iterate over cell corners: points with `p_i <= r_i - 2` for all `i`.
    /// Empty when some side is 1.
    pub fn iter_cells(&self) -> impl Iterator<Item = GridPoint> + '_ {
        self.iter_points().filter(|p| p.0.iter().zip(&self.r).all(|(&c, &x)| c + 1 < x))
    }

    /// The points of `K_p` that lie inside the grid.
    pub fn cube_points(&self, p: &GridPoint) -> Vec<GridPoint> {
        let d = self.dim();
        let mut out = Vec::with_capacity(1 << d);
        for mask in 0u64..(1 << d) {
            let mut q = p.0.clone();
            let mut ok = true;
            for (i, c) in q.iter_mut().enumerate() {
                if (mask >> i) & 1 == 1 {
                    *c += 1;
                }
                if *c >= self.r[i] {
                    ok = false;
                    break;
                }
            }
            if ok {
                out.push(GridPoint(q));
            }
        }
        out
    }

    /// Whether every point of `set` lies in a single unit cube of the grid.
    pub fn accommodated(&self, set: &[GridPoint]) -> bool {
        if set.is_empty() {
            return false;
        }
        if set.iter().any(|p| !self.contains(p)) {
            return false;
        }
        let d = self.dim();
        for i in 0..d {
            let lo = set.iter().map(|p| p.coord(i)).min().unwrap();
            let hi = set.iter().map(|p| p.coord(i)).max().unwrap();
            if hi - lo > 1 {
                return false;
            }
        }
        true
    }
}

pub struct GridIter<'a> {
    bounds: &'a GridBounds,
    next: Option<GridPoint>,
}

impl Iterator for GridIter<'_> {
    type Item = GridPoint;

    fn next(&mut self) -> Option<GridPoint> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let d = succ.dim();
        let mut i = d;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ.0[i] += 1;
            if succ.0[i] < self.bounds.r[i] {
                self.next = Some(succ);
                break;
            }
            succ.0[i] = 0;
        }
        Some(current)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum GridError {
    EmptyBounds,
    ZeroSide,
    DimensionMismatch { expected: usize, got: usize },
    OutOfRange { point: GridPoint },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::EmptyBounds => write!(f, "grid must have at least one dimension"),
            GridError::ZeroSide => write!(f, "grid side lengths must be positive"),
            GridError::DimensionMismatch { expected, got } => {
                write!(f, "expected a {expected}-dimensional point, got {got}")
            }
            GridError::OutOfRange { point } => write!(f, "point {point:?} outside the grid"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GridError {}
