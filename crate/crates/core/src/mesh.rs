//! Regular rectangular mesh geometry and per-point state bookkeeping.
//!
//! Points are linearized with the axis-2 index varying fastest:
//! `index(i, j) = i * n2 + j`, where `i` runs along `x1` and `j` along `x2`.
//! Binary grid dumps use this order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh needs at least 2 points per axis, got {n1} x {n2}")]
    TooFewPoints { n1: usize, n2: usize },
    #[error("mesh bounds must be finite and increasing: [{min}, {max}]")]
    BadBounds { min: f64, max: f64 },
    #[error("mesh position ({i}, {j}) outside {n1} x {n2}")]
    OutOfRange { i: usize, j: usize, n1: usize, n2: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    x1_min: f64,
    x1_max: f64,
    x2_min: f64,
    x2_max: f64,
    n1: usize,
    n2: usize,
    h1: f64,
    h2: f64,
}

/// Offsets of the eight nearest neighbors, clockwise from north:
/// N, NE, E, SE, S, SW, W, NW. North is +x2, east is +x1.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];

impl Mesh {
    pub fn new(
        x1_range: (f64, f64),
        x2_range: (f64, f64),
        n1: usize,
        n2: usize,
    ) -> Result<Self, MeshError> {
        if n1 < 2 || n2 < 2 {
            return Err(MeshError::TooFewPoints { n1, n2 });
        }
        for &(min, max) in &[x1_range, x2_range] {
            if !(min.is_finite() && max.is_finite() && max > min) {
                return Err(MeshError::BadBounds { min, max });
            }
        }
        let h1 = (x1_range.1 - x1_range.0) / (n1 - 1) as f64;
        let h2 = (x2_range.1 - x2_range.0) / (n2 - 1) as f64;
        Ok(Mesh {
            x1_min: x1_range.0,
            x1_max: x1_range.1,
            x2_min: x2_range.0,
            x2_max: x2_range.1,
            n1,
            n2,
            h1,
            h2,
        })
    }

    /// Square `n x n` mesh on `[lo, hi]^2`.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self, MeshError> {
        Mesh::new((lo, hi), (lo, hi), n, n)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }
    pub fn n2(&self) -> usize {
        self.n2
    }
    pub fn h1(&self) -> f64 {
        self.h1
    }
    pub fn h2(&self) -> f64 {
        self.h2
    }
    /// `max(h1, h2)`, the step the update radius is measured in.
    pub fn h(&self) -> f64 {
        self.h1.max(self.h2)
    }
    /// Length of a cell diagonal, `sqrt(h1^2 + h2^2)`.
    pub fn diag(&self) -> f64 {
        self.h1.hypot(self.h2)
    }
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn x1_range(&self) -> (f64, f64) {
        (self.x1_min, self.x1_max)
    }
    pub fn x2_range(&self) -> (f64, f64) {
        (self.x2_min, self.x2_max)
    }

    pub fn index(&self, i: usize, j: usize) -> Result<usize, MeshError> {
        if i >= self.n1 || j >= self.n2 {
            return Err(MeshError::OutOfRange { i, j, n1: self.n1, n2: self.n2 });
        }
        Ok(self.idx(i, j))
    }

    /// Unchecked linearization for internal hot loops.
    #[inline]
    pub(crate) fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    #[inline]
    pub fn position(&self, idx: usize) -> (usize, usize) {
        (idx / self.n2, idx % self.n2)
    }

    #[inline]
    pub fn coord_ij(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.x1_min + i as f64 * self.h1,
            self.x2_min + j as f64 * self.h2,
        )
    }

    #[inline]
    pub fn coord(&self, idx: usize) -> Vec2 {
        let (i, j) = self.position(idx);
        self.coord_ij(i, j)
    }

    pub fn contains(&self, x: Vec2) -> bool {
        x.x >= self.x1_min && x.x <= self.x1_max && x.y >= self.x2_min && x.y <= self.x2_max
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.position(idx);
        i == 0 || j == 0 || i == self.n1 - 1 || j == self.n2 - 1
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<usize> {
        let ii = i as isize + di;
        let jj = j as isize + dj;
        (ii >= 0 && jj >= 0 && (ii as usize) < self.n1 && (jj as usize) < self.n2)
            .then(|| self.idx(ii as usize, jj as usize))
    }

    /// In-bounds nearest neighbors, clockwise from N (see [`NEIGHBOR_OFFSETS`]).
    pub fn neighbors8(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.position(idx);
        NEIGHBOR_OFFSETS
            .iter()
            .filter_map(move |&(di, dj)| self.offset(i, j, di, dj))
    }

    /// Index ranges of the bounding box of the closed ball of radius `r`.
    pub(crate) fn ball_box(&self, idx: usize, r: f64) -> (usize, usize, usize, usize) {
        let (i, j) = self.position(idx);
        let ri = (r / self.h1 + 1e-9).floor() as usize;
        let rj = (r / self.h2 + 1e-9).floor() as usize;
        (
            i.saturating_sub(ri),
            (i + ri).min(self.n1 - 1),
            j.saturating_sub(rj),
            (j + rj).min(self.n2 - 1),
        )
    }

    /// All points `y != x` with `|y - x| <= r`, in increasing index order.
    ///
    /// Only the bounding box of the ball is scanned. Distances are measured
    /// from integer offsets so the result is symmetric in `x` and `y`.
    pub fn points_within_radius(&self, idx: usize, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if r < 0.0 {
            return out;
        }
        let (i, j) = self.position(idx);
        let (i0, i1, j0, j1) = self.ball_box(idx, r);
        let r2 = r * r * (1.0 + 1e-12);
        for ii in i0..=i1 {
            let dx = (ii as f64 - i as f64) * self.h1;
            for jj in j0..=j1 {
                if ii == i && jj == j {
                    continue;
                }
                let dy = (jj as f64 - j as f64) * self.h2;
                if dx * dx + dy * dy <= r2 {
                    out.push(self.idx(ii, jj));
                }
            }
        }
        out
    }

    /// Mesh cell `(i, j)` whose lower-left corner is at or below `x`, clamped
    /// so that `(i + 1, j + 1)` stays inside the mesh.
    pub fn cell_of(&self, x: Vec2) -> (usize, usize) {
        let fi = ((x.x - self.x1_min) / self.h1).floor();
        let fj = ((x.y - self.x2_min) / self.h2).floor();
        let i = (fi.max(0.0) as usize).min(self.n1 - 2);
        let j = (fj.max(0.0) as usize).min(self.n2 - 2);
        (i, j)
    }
}

/// Life cycle of a mesh point during a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum PointState {
    Unknown = 0,
    Considered = 1,
    AcceptedFront = 2,
    Accepted = 3,
}

impl PointState {
    /// The only state a point may move to from `self`.
    pub fn successor(self) -> Option<PointState> {
        match self {
            PointState::Unknown => Some(PointState::Considered),
            PointState::Considered => Some(PointState::AcceptedFront),
            PointState::AcceptedFront => Some(PointState::Accepted),
            PointState::Accepted => None,
        }
    }

    pub fn is_finalized(self) -> bool {
        matches!(self, PointState::AcceptedFront | PointState::Accepted)
    }

    pub fn name(self) -> &'static str {
        match self {
            PointState::Unknown => "unknown",
            PointState::Considered => "considered",
            PointState::AcceptedFront => "accepted_front",
            PointState::Accepted => "accepted",
        }
    }

    pub fn from_u8(v: u8) -> Option<PointState> {
        match v {
            0 => Some(PointState::Unknown),
            1 => Some(PointState::Considered),
            2 => Some(PointState::AcceptedFront),
            3 => Some(PointState::Accepted),
            _ => None,
        }
    }
}

/// Sequence number of a point that has not been accepted.
pub const NOT_ACCEPTED: u32 = u32::MAX;

/// Per-point state, tentative value and acceptance order.
///
/// Transitions are checked: each call to [`StateGrid::advance`] must move a
/// point one step along Unknown -> Considered -> AcceptedFront -> Accepted.
#[derive(Debug, Clone)]
pub struct StateGrid {
    state: Vec<PointState>,
    value: Vec<f64>,
    order: Vec<u32>,
    next_order: u32,
}

impl StateGrid {
    pub fn new(len: usize) -> Self {
        StateGrid {
            state: vec![PointState::Unknown; len],
            value: vec![f64::INFINITY; len],
            order: vec![NOT_ACCEPTED; len],
            next_order: 0,
        }
    }

    #[inline]
    pub fn state(&self, idx: usize) -> PointState {
        self.state[idx]
    }

    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        self.value[idx]
    }

    pub fn order(&self, idx: usize) -> u32 {
        self.order[idx]
    }

    pub fn states(&self) -> &[PointState] {
        &self.state
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    pub fn orders(&self) -> &[u32] {
        &self.order
    }

    pub fn accepted_count(&self) -> u32 {
        self.next_order
    }

    /// Moves `idx` to the next state, which must equal `to`.
    ///
    /// # Panics
    /// On an illegal transition.
    pub fn advance(&mut self, idx: usize, to: PointState) {
        let from = self.state[idx];
        assert_eq!(
            from.successor(),
            Some(to),
            "illegal state transition {from:?} -> {to:?} at point {idx}"
        );
        self.state[idx] = to;
        if to == PointState::AcceptedFront {
            self.order[idx] = self.next_order;
            self.next_order += 1;
        }
    }

    /// Marks an Unknown point Considered with a finite tentative value.
    pub fn consider(&mut self, idx: usize, value: f64) {
        debug_assert!(value.is_finite() && value >= 0.0);
        self.advance(idx, PointState::Considered);
        self.value[idx] = value;
    }

    /// Lowers the tentative value of a Considered point.
    pub fn lower(&mut self, idx: usize, value: f64) {
        debug_assert_eq!(self.state[idx], PointState::Considered);
        debug_assert!(value <= self.value[idx]);
        self.value[idx] = value;
    }

    pub(crate) fn into_parts(self) -> (Vec<PointState>, Vec<f64>, Vec<u32>) {
        (self.state, self.value, self.order)
    }
}
