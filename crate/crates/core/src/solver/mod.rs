//! The ordered solve: seed the Considered set, then repeatedly accept the
//! smallest tentative value and update points within the update radius.

mod cache;
mod init;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use init::{circle_polyline, curve_neighborhood, curve_projection, curve_seed_value, init_curve, init_point, QuadraticForm, Seed};

use crate::field::{FieldError, VectorField};
use crate::geom::Vec2;
use crate::heap::ConsideredHeap;
use crate::mesh::{Mesh, MeshError, PointState, StateGrid, NOT_ACCEPTED};
use crate::quadrature::{segment_action, QuadRule, SegmentSamples};
use crate::updates::{oum_triangle_update, triangle_from_samples, TriangleSamples, UpdateCandidate, UpdateKind};
use cache::FieldCache;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Olim(QuadRule),
    /// Finite-difference upwind triangle updates from every adjacent pair of
    /// Accepted Front points in range, with right-hand one-point updates.
    OumFd,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Olim(QuadRule::RightHand),
        Method::Olim(QuadRule::Midpoint),
        Method::Olim(QuadRule::Trapezoid),
        Method::Olim(QuadRule::Simpson),
        Method::OumFd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Olim(QuadRule::RightHand) => "olim-r",
            Method::Olim(QuadRule::Midpoint) => "olim-mid",
            Method::Olim(QuadRule::Trapezoid) => "olim-tr",
            Method::Olim(QuadRule::Simpson) => "olim-sim",
            Method::OumFd => "oum",
        }
    }

    pub fn from_name(name: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Quadrature rule of the one-point update.
    pub fn one_point_rule(self) -> QuadRule {
        match self {
            Method::Olim(rule) => rule,
            Method::OumFd => QuadRule::RightHand,
        }
    }
}

/// Recommended update factor for an `n x n` mesh. Tuned for
/// `128 <= n <= 4096`; smaller meshes are clamped to `K >= 1`.
pub fn rule_of_thumb_k(method: Method, n: usize) -> u32 {
    let p = (n.max(1) as f64).log2().round() as i64;
    let k = match method {
        Method::Olim(QuadRule::RightHand) | Method::OumFd => p - 3,
        Method::Olim(_) => 10 + 4 * (p - 7),
    };
    k.max(1) as u32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Init {
    EquilibriumPoint(Vec2),
    /// Closed polyline; the last vertex connects back to the first.
    LimitCycle(Vec<Vec2>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StopPolicy {
    /// Stop once the accepted minimum lies on the mesh boundary.
    #[default]
    OnBoundaryReached,
    ExhaustConsidered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub k: u32,
    pub init: Init,
    pub stop_policy: StopPolicy,
    pub record_update_lengths: bool,
}

impl SolverConfig {
    pub fn new(method: Method, k: u32, init: Init) -> Self {
        SolverConfig {
            method,
            k,
            init,
            stop_policy: StopPolicy::default(),
            record_update_lengths: false,
        }
    }

    pub fn with_stop_policy(mut self, p: StopPolicy) -> Self {
        self.stop_policy = p;
        self
    }

    pub fn with_update_lengths(mut self, on: bool) -> Self {
        self.record_update_lengths = on;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.k < 1 {
            return Err(SolveError::InvalidK(self.k));
        }
        if let Init::LimitCycle(p) = &self.init {
            if p.len() < 3 {
                return Err(SolveError::PolylineTooShort(p.len()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("update factor K must be at least 1, got {0}")]
    InvalidK(u32),
    #[error("limit-cycle polyline needs at least 3 points, got {0}")]
    PolylineTooShort(usize),
    #[error("point ({x}, {y}) is outside the mesh")]
    OutsideDomain { x: f64, y: f64 },
    #[error("initial point is not an equilibrium: |b(x0)| = {residual:e}")]
    NotEquilibrium { residual: f64 },
    #[error("equilibrium is not stable: trace {trace}, determinant {det}")]
    UnstableEquilibrium { trace: f64, det: f64 },
    #[error("no mesh points near the limit-cycle polyline")]
    EmptyNeighborhood,
    #[error("field vanishes on the limit cycle at ({x}, {y})")]
    StagnantCurve { x: f64, y: f64 },
    #[error("grid data does not match the mesh: {0}")]
    GridShape(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl SolveError {
    /// True for failures of the problem itself rather than of its
    /// configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SolveError::NotEquilibrium { .. }
                | SolveError::UnstableEquilibrium { .. }
                | SolveError::EmptyNeighborhood
                | SolveError::StagnantCurve { .. }
                | SolveError::Field(_)
        )
    }
}

/// Where a point's value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: UpdateKind,
    pub x0: usize,
    pub x1: Option<usize>,
}

/// Relative round-off allowed below zero for a segment action, and below
/// the smaller source value for a triangle candidate.
const ACTION_SLACK: f64 = 1e-12;

/// Counters from the invariant checks of an audited solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub heap_checks: u64,
    pub heap_failures: u64,
    pub state_checks: u64,
    pub state_failures: u64,
    pub length_failures: u64,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.heap_failures == 0 && self.state_failures == 0 && self.length_failures == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub elapsed: Duration,
    pub accepted: u64,
    pub one_point_updates: u64,
    pub triangle_updates: u64,
    pub triangle_successes: u64,
    pub improvements: u64,
    /// Candidates below the smaller of their source values. Always 0 unless
    /// an update formula is broken.
    pub source_bound_violations: u64,
    /// Candidates whose segment action came out negative beyond round-off.
    pub negative_actions: u64,
    /// Accepted values smaller than an earlier accepted value, and the
    /// largest such drop.
    pub acceptance_drops: u64,
    pub max_acceptance_drop: f64,
    pub field_failures: u64,
    pub stopped_on_boundary: bool,
    pub audit: Option<AuditReport>,
}

/// Result of a solve. Unset values are `+inf`.
#[derive(Debug, Clone)]
pub struct SolutionGrid {
    mesh: Mesh,
    values: Vec<f64>,
    states: Vec<PointState>,
    order: Vec<u32>,
    update_length: Option<Vec<f64>>,
    provenance: Vec<Option<Provenance>>,
    stats: SolveStats,
}

impl SolutionGrid {
    /// Grid rebuilt from stored arrays, e.g. a previous run's dump.
    pub fn from_parts(
        mesh: Mesh,
        values: Vec<f64>,
        states: Vec<PointState>,
        order: Option<Vec<u32>>,
        update_length: Option<Vec<f64>>,
    ) -> Result<Self, SolveError> {
        let n = mesh.len();
        let shape_ok = values.len() == n
            && states.len() == n
            && order.as_ref().is_none_or(|o| o.len() == n)
            && update_length.as_ref().is_none_or(|l| l.len() == n);
        if !shape_ok {
            return Err(SolveError::GridShape(format!("expected {n} entries per array")));
        }
        Ok(SolutionGrid {
            mesh,
            values,
            states,
            order: order.unwrap_or_else(|| vec![NOT_ACCEPTED; n]),
            update_length,
            provenance: vec![None; n],
            stats: SolveStats::default(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn states(&self) -> &[PointState] {
        &self.states
    }
    pub fn orders(&self) -> &[u32] {
        &self.order
    }
    pub fn update_lengths(&self) -> Option<&[f64]> {
        self.update_length.as_deref()
    }
    pub fn provenance(&self, idx: usize) -> Option<Provenance> {
        self.provenance[idx]
    }
    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    /// Value at `idx` if one was computed.
    pub fn value(&self, idx: usize) -> Option<f64> {
        let v = self.values[idx];
        v.is_finite().then_some(v)
    }

    pub fn state(&self, idx: usize) -> PointState {
        self.states[idx]
    }

    /// Finalized points carry the solver's answer; Considered points left
    /// over by an early stop only hold tentative values.
    pub fn is_final(&self, idx: usize) -> bool {
        self.states[idx].is_finalized()
    }

    pub fn finalized_count(&self) -> usize {
        self.states.iter().filter(|s| s.is_finalized()).count()
    }

    /// Points with a tentative value that was never finalized.
    pub fn non_final_count(&self) -> usize {
        self.states.iter().filter(|&&s| s == PointState::Considered).count()
    }

    /// Same arrays, ignoring timing and counters.
    pub fn same_solution(&self, other: &SolutionGrid) -> bool {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        self.mesh == other.mesh
            && bits(&self.values) == bits(&other.values)
            && self.states == other.states
            && self.order == other.order
            && self.update_length.as_deref().map(bits) == other.update_length.as_deref().map(bits)
            && self.provenance == other.provenance
    }
}

pub fn solve(mesh: &Mesh, field: &VectorField, config: &SolverConfig) -> Result<SolutionGrid, SolveError> {
    run(mesh, field, config, false)
}

/// Like [`solve`], with heap, state and update-length checks on every
/// iteration; results land in `stats().audit`.
pub fn solve_audited(mesh: &Mesh, field: &VectorField, config: &SolverConfig) -> Result<SolutionGrid, SolveError> {
    run(mesh, field, config, true)
}

fn run(mesh: &Mesh, field: &VectorField, config: &SolverConfig, audit: bool) -> Result<SolutionGrid, SolveError> {
    config.validate()?;
    let start = Instant::now();
    let seeds = match &config.init {
        Init::EquilibriumPoint(x0) => init_point(mesh, field, *x0)?,
        Init::LimitCycle(p) => init_curve(mesh, field, p)?,
    };
    let mut s = Solver::new(mesh, field, config, audit);
    for seed in seeds {
        s.seed(seed);
    }
    s.main_loop();
    let mut stats = s.stats;
    stats.elapsed = start.elapsed();
    stats.audit = audit.then_some(s.audit);
    let (states, values, order) = s.grid.into_parts();
    Ok(SolutionGrid {
        mesh: mesh.clone(),
        values,
        states,
        order,
        update_length: config.record_update_lengths.then_some(s.length),
        provenance: s.prov,
        stats,
    })
}

struct Solver<'a> {
    mesh: &'a Mesh,
    method: Method,
    stop: StopPolicy,
    cache: FieldCache,
    grid: StateGrid,
    heap: ConsideredHeap,
    length: Vec<f64>,
    prov: Vec<Option<Provenance>>,
    /// Offsets `(di, dj)` of the update ball, excluding the origin, in
    /// increasing linear-index order.
    ball: Vec<(isize, isize)>,
    /// Offsets within `Kh + sqrt(h1^2 + h2^2)`, flagged when also within `Kh`.
    reach: Vec<(isize, isize, bool)>,
    radius_sq: f64,
    length_bound: f64,
    stats: SolveStats,
    audit_on: bool,
    audit: AuditReport,
    last_accepted: f64,
}

impl<'a> Solver<'a> {
    fn new(mesh: &'a Mesh, field: &VectorField, config: &SolverConfig, audit_on: bool) -> Self {
        let r = config.k as f64 * mesh.h();
        let radius_sq = r * r * (1.0 + 1e-12);
        let ri = (r / mesh.h1() + 1e-9).floor() as isize;
        let rj = (r / mesh.h2() + 1e-9).floor() as isize;
        let mut ball = Vec::new();
        for di in -ri..=ri {
            for dj in -rj..=rj {
                let (dx, dy) = (di as f64 * mesh.h1(), dj as f64 * mesh.h2());
                if (di, dj) != (0, 0) && dx * dx + dy * dy <= radius_sq {
                    ball.push((di, dj));
                }
            }
        }
        let outer = r + mesh.diag();
        let (oi, oj) = ((outer / mesh.h1() + 1e-9).floor() as isize, (outer / mesh.h2() + 1e-9).floor() as isize);
        let mut reach = Vec::new();
        for di in -oi..=oi {
            for dj in -oj..=oj {
                let (dx, dy) = (di as f64 * mesh.h1(), dj as f64 * mesh.h2());
                let d2 = dx * dx + dy * dy;
                if (di, dj) != (0, 0) && d2 <= outer * outer * (1.0 + 1e-12) {
                    reach.push((di, dj, d2 <= radius_sq));
                }
            }
        }
        let cache = FieldCache::new(mesh, field);
        let stats = SolveStats { field_failures: cache.failures as u64, ..Default::default() };
        Solver {
            mesh,
            method: config.method,
            stop: config.stop_policy,
            cache,
            grid: StateGrid::new(mesh.len()),
            heap: ConsideredHeap::new(mesh.len()),
            length: vec![f64::NAN; mesh.len()],
            prov: vec![None; mesh.len()],
            ball,
            reach,
            radius_sq,
            length_bound: r + mesh.diag() + 1e-12,
            stats,
            audit_on,
            audit: AuditReport::default(),
            last_accepted: f64::NEG_INFINITY,
        }
    }

    fn seed(&mut self, seed: Seed) {
        if self.grid.state(seed.idx) != PointState::Unknown {
            return;
        }
        self.grid.consider(seed.idx, seed.value);
        self.heap.push(seed.idx, seed.value);
        self.length[seed.idx] = 0.0;
        self.prov[seed.idx] = Some(Provenance { kind: UpdateKind::Init, x0: seed.idx, x1: None });
    }

    #[inline]
    fn shift(&self, idx: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.mesh.position(idx);
        let ii = i as isize + di;
        let jj = j as isize + dj;
        (ii >= 0 && jj >= 0 && (ii as usize) < self.mesh.n1() && (jj as usize) < self.mesh.n2())
            .then(|| ii as usize * self.mesh.n2() + jj as usize)
    }

    fn in_ball(&self, a: usize, b: usize) -> bool {
        let (ia, ja) = self.mesh.position(a);
        let (ib, jb) = self.mesh.position(b);
        let dx = (ia as f64 - ib as f64) * self.mesh.h1();
        let dy = (ja as f64 - jb as f64) * self.mesh.h2();
        dx * dx + dy * dy <= self.radius_sq
    }

    fn is_front(&self, idx: usize) -> bool {
        self.grid.state(idx) == PointState::AcceptedFront
    }

    fn has_open_neighbor(&self, idx: usize) -> bool {
        self.mesh.neighbors8(idx).any(|n| !self.grid.state(n).is_finalized())
    }

    fn one_point(&mut self, x0: usize, x: usize) -> UpdateCandidate {
        self.stats.one_point_updates += 1;
        let samples = SegmentSamples {
            start: self.mesh.coord(x0),
            end: self.mesh.coord(x),
            b_start: self.cache.node(x0),
            b_mid: self.cache.mid(x0, x),
            b_end: self.cache.node(x),
        };
        let u0 = self.grid.value(x0);
        let action = segment_action(self.method.one_point_rule(), &samples);
        if action < -ACTION_SLACK * (1.0 + u0) {
            self.stats.negative_actions += 1;
        }
        UpdateCandidate {
            value: u0 + action,
            s_star: None,
            kind: UpdateKind::OnePoint,
            length: samples.end.dist(samples.start),
        }
    }

    fn triangle(&mut self, x1: usize, x0: usize, x: usize) -> UpdateCandidate {
        self.stats.triangle_updates += 1;
        let (u0, u1) = (self.grid.value(x0), self.grid.value(x1));
        let cand = match self.method {
            Method::Olim(rule) => {
                let t = TriangleSamples {
                    x0: self.mesh.coord(x0),
                    u0,
                    x1: self.mesh.coord(x1),
                    u1,
                    x: self.mesh.coord(x),
                    b_x: self.cache.node(x),
                    b0: self.cache.node(x0),
                    b1: self.cache.node(x1),
                    bm0: self.cache.mid(x0, x),
                    bm1: self.cache.mid(x1, x),
                };
                triangle_from_samples(rule, &t)
            }
            Method::OumFd => oum_triangle_update(
                self.mesh.coord(x1),
                u1,
                self.mesh.coord(x0),
                u0,
                self.mesh.coord(x),
                self.cache.node(x),
            ),
        };
        if cand.value.is_finite() {
            self.stats.triangle_successes += 1;
            let floor = u0.min(u1);
            if cand.value < floor - ACTION_SLACK * (1.0 + floor) {
                self.stats.source_bound_violations += 1;
            }
            if let Some(s) = cand.s_star {
                let base = s * u0 + (1.0 - s) * u1;
                if cand.value - base < -ACTION_SLACK * (1.0 + base) {
                    self.stats.negative_actions += 1;
                }
            }
        }
        cand
    }

    /// Keeps the smaller of `best` and `cand`.
    #[inline]
    fn take(best: &mut (UpdateCandidate, Provenance), cand: UpdateCandidate, prov: Provenance) {
        if cand.value < best.0.value {
            *best = (cand, prov);
        }
    }

    fn main_loop(&mut self) {
        let mut pops: u64 = 0;
        while let Some((x, v)) = self.heap.pop() {
            pops += 1;
            if v < self.last_accepted {
                self.stats.acceptance_drops += 1;
                self.stats.max_acceptance_drop = self.stats.max_acceptance_drop.max(self.last_accepted - v);
            } else {
                self.last_accepted = v;
            }
            self.grid.advance(x, PointState::AcceptedFront);
            self.stats.accepted += 1;
            if self.stop == StopPolicy::OnBoundaryReached && self.mesh.is_boundary(x) {
                self.stats.stopped_on_boundary = true;
                break;
            }
            self.retire_front_neighbors(x);
            self.update_considered(x);
            self.add_unknown_neighbors(x);
            if !self.has_open_neighbor(x) {
                self.grid.advance(x, PointState::Accepted);
            }
            if self.audit_on {
                self.audit_iteration(x, pops);
            }
        }
    }

    /// Step 2: front neighbors of `x` that no longer border unfinished
    /// points leave the front.
    fn retire_front_neighbors(&mut self, x: usize) {
        let mut buf = [0usize; 8];
        let mut n = 0;
        for y in self.mesh.neighbors8(x) {
            buf[n] = y;
            n += 1;
        }
        for &y in &buf[..n] {
            if self.is_front(y) && !self.has_open_neighbor(y) {
                self.grid.advance(y, PointState::Accepted);
            }
        }
    }

    fn front_neighbors(&self, x: usize) -> ([usize; 8], usize) {
        let mut buf = [0usize; 8];
        let mut n = 0;
        for y in self.mesh.neighbors8(x) {
            if self.is_front(y) {
                buf[n] = y;
                n += 1;
            }
        }
        (buf, n)
    }

    /// Step 3: Considered points near the new front point `x` try `x` as a
    /// source. Points within `Kh` get the one-point update from `x` and the
    /// triangle updates pairing `x` with each of its front neighbors. Points
    /// beyond `Kh` get the triangles pairing `x` with front neighbors that
    /// are within `Kh` of them. The OUM baseline recomputes every point in
    /// reach from all front pairs instead.
    fn update_considered(&mut self, x: usize) {
        let (nbrs, nn) = self.front_neighbors(x);
        for k in 0..self.reach.len() {
            let (di, dj, inner) = self.reach[k];
            let Some(y) = self.shift(x, di, dj) else { continue };
            if self.grid.state(y) != PointState::Considered {
                continue;
            }
            let best = match self.method {
                Method::OumFd => match self.exhaustive_value(y) {
                    Some(b) => b,
                    None => continue,
                },
                Method::Olim(_) => {
                    let mut best = (
                        UpdateCandidate::failed(UpdateKind::OnePoint),
                        Provenance { kind: UpdateKind::OnePoint, x0: x, x1: None },
                    );
                    if inner {
                        let c = self.one_point(x, y);
                        Self::take(&mut best, c, Provenance { kind: UpdateKind::OnePoint, x0: x, x1: None });
                    }
                    for &x1 in &nbrs[..nn] {
                        if inner {
                            let c = self.triangle(x1, x, y);
                            Self::take(&mut best, c, Provenance { kind: UpdateKind::Triangle, x0: x, x1: Some(x1) });
                        } else if self.in_ball(x1, y) {
                            let c = self.triangle(x, x1, y);
                            Self::take(&mut best, c, Provenance { kind: UpdateKind::Triangle, x0: x1, x1: Some(x) });
                        }
                    }
                    best
                }
            };
            if best.0.value < self.grid.value(y) {
                self.grid.lower(y, best.0.value);
                self.heap.decrease(y, best.0.value);
                self.record(y, best);
                if self.audit_on {
                    self.audit.heap_checks += 1;
                    if !self.heap.check_local(y) {
                        self.audit.heap_failures += 1;
                    }
                }
            }
        }
    }

    /// Step 4: Unknown neighbors of `x` get values from the front points in
    /// range and become Considered.
    fn add_unknown_neighbors(&mut self, x: usize) {
        let mut buf = [0usize; 8];
        let mut n = 0;
        for y in self.mesh.neighbors8(x) {
            buf[n] = y;
            n += 1;
        }
        for &y in &buf[..n] {
            if self.grid.state(y) != PointState::Unknown {
                continue;
            }
            let best = match self.method {
                Method::Olim(_) => self.hierarchical_value(y),
                Method::OumFd => self.exhaustive_value(y),
            };
            if let Some(best) = best {
                self.grid.consider(y, best.0.value);
                self.heap.push(y, best.0.value);
                self.record(y, best);
            }
        }
    }

    /// One-point updates from every front point in range, then triangle
    /// updates around the best one-point source only.
    fn hierarchical_value(&mut self, y: usize) -> Option<(UpdateCandidate, Provenance)> {
        let mut best: Option<(UpdateCandidate, Provenance)> = None;
        for k in 0..self.ball.len() {
            let (di, dj) = self.ball[k];
            let Some(z) = self.shift(y, di, dj) else { continue };
            if !self.is_front(z) {
                continue;
            }
            let c = self.one_point(z, y);
            if best.map_or(c.value.is_finite(), |b| c.value < b.0.value) {
                best = Some((c, Provenance { kind: UpdateKind::OnePoint, x0: z, x1: None }));
            }
        }
        let mut best = best?;
        let x0 = best.1.x0;
        let (nbrs, nn) = self.front_neighbors(x0);
        for &x1 in &nbrs[..nn] {
            let c = self.triangle(x1, x0, y);
            Self::take(&mut best, c, Provenance { kind: UpdateKind::Triangle, x0, x1: Some(x1) });
        }
        Some(best)
    }

    /// One-point updates and triangle updates from every adjacent front pair
    /// with at least one end in range.
    fn exhaustive_value(&mut self, y: usize) -> Option<(UpdateCandidate, Provenance)> {
        let mut best = (
            UpdateCandidate::failed(UpdateKind::OnePoint),
            Provenance { kind: UpdateKind::OnePoint, x0: y, x1: None },
        );
        for k in 0..self.ball.len() {
            let (di, dj) = self.ball[k];
            let Some(x0) = self.shift(y, di, dj) else { continue };
            if !self.is_front(x0) {
                continue;
            }
            let c = self.one_point(x0, y);
            Self::take(&mut best, c, Provenance { kind: UpdateKind::OnePoint, x0, x1: None });
            let (nbrs, nn) = self.front_neighbors(x0);
            for &x1 in &nbrs[..nn] {
                // Pairs with both ends in range are visited from the lower index.
                if x1 < x0 && self.in_ball(x1, y) {
                    continue;
                }
                let c = self.triangle(x1, x0, y);
                Self::take(&mut best, c, Provenance { kind: UpdateKind::Triangle, x0, x1: Some(x1) });
            }
        }
        best.0.value.is_finite().then_some(best)
    }

    fn record(&mut self, y: usize, (cand, prov): (UpdateCandidate, Provenance)) {
        self.stats.improvements += 1;
        self.length[y] = cand.length;
        self.prov[y] = Some(prov);
        if self.audit_on && !(cand.length <= self.length_bound) {
            self.audit.length_failures += 1;
        }
    }

    fn audit_iteration(&mut self, x: usize, pops: u64) {
        let check = |s: &Self, y: usize, audit: &mut AuditReport| {
            audit.state_checks += 1;
            let front = s.is_front(y);
            let open = s.has_open_neighbor(y);
            let ok = match s.grid.state(y) {
                PointState::AcceptedFront => open,
                PointState::Accepted => !open,
                _ => true,
            };
            if !ok || (front && !s.mesh.neighbors8(y).any(|n| s.grid.state(n) == PointState::Considered)) {
                audit.state_failures += 1;
            }
        };
        let mut audit = self.audit;
        check(self, x, &mut audit);
        for y in self.mesh.neighbors8(x) {
            check(self, y, &mut audit);
        }
        if pops.is_multiple_of(4096) {
            audit.heap_checks += 1;
            if !self.heap.check_integrity() {
                audit.heap_failures += 1;
            }
        }
        self.audit = audit;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_of_thumb_examples() {
        let r = Method::Olim(QuadRule::RightHand);
        let mid = Method::Olim(QuadRule::Midpoint);
        assert_eq!(rule_of_thumb_k(r, 256), 5);
        assert_eq!(rule_of_thumb_k(Method::OumFd, 512), 6);
        assert_eq!(rule_of_thumb_k(mid, 128), 10);
        assert_eq!(rule_of_thumb_k(mid, 4096), 30);
        assert_eq!(rule_of_thumb_k(mid, 64), 6);
        assert_eq!(rule_of_thumb_k(r, 4), 1);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_name(m.name()), Some(m));
        }
        assert_eq!(Method::from_name("fmm"), None);
    }

    #[test]
    fn config_validation() {
        let c = SolverConfig::new(Method::OumFd, 0, Init::EquilibriumPoint(Vec2::ZERO));
        assert_eq!(c.validate(), Err(SolveError::InvalidK(0)));
        let c = SolverConfig::new(Method::OumFd, 1, Init::LimitCycle(vec![Vec2::ZERO; 2]));
        assert_eq!(c.validate(), Err(SolveError::PolylineTooShort(2)));
    }

    #[test]
    fn single_source_gives_one_point_value() {
        // Only the seed is on the front when its neighbors are first valued.
        let mesh = Mesh::square(-1.0, 1.0, 3).unwrap();
        let field = VectorField::linear(0.0);
        let cfg = SolverConfig::new(Method::Olim(QuadRule::Midpoint), 2, Init::EquilibriumPoint(Vec2::ZERO))
            .with_stop_policy(StopPolicy::ExhaustConsidered);
        let g = solve(&mesh, &field, &cfg).unwrap();
        assert_eq!(g.finalized_count(), 9);
        let center = mesh.index(1, 1).unwrap();
        assert_eq!(g.value(center), Some(0.0));
        for idx in 0..9 {
            let x = mesh.coord(idx);
            assert!((g.value(idx).unwrap() - (2.0 * x.x * x.x + x.y * x.y)).abs() < 1e-14);
        }
    }
}
