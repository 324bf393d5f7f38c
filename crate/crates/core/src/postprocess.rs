//! Working with a computed grid: gradients, minimum action paths, actions
//! along polylines, error norms and convergence fits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, VectorField};
use crate::geom::Vec2;
use crate::mesh::Mesh;
use crate::quadrature::least_squares_slope;
use crate::solver::{Init, SolutionGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PostprocessError {
    #[error("point ({x}, {y}) is outside the mesh")]
    OutsideDomain { x: f64, y: f64 },
    #[error("no computed values around ({x}, {y})")]
    Unset { x: f64, y: f64 },
    #[error("{0}")]
    FitInput(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Finite-difference gradient of a solution. Entries are NaN where the
/// stencil touches points without a final value.
#[derive(Debug, Clone)]
pub struct GradientGrid {
    mesh: Mesh,
    grad: Vec<Vec2>,
}

impl GradientGrid {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn get(&self, idx: usize) -> Option<Vec2> {
        let g = self.grad[idx];
        g.is_finite().then_some(g)
    }

    /// Bilinear interpolation from the enclosing cell; `None` unless all four
    /// corners are set or `x` is outside the mesh.
    pub fn interpolate(&self, x: Vec2) -> Option<Vec2> {
        if !self.mesh.contains(x) {
            return None;
        }
        let (i, j) = self.mesh.cell_of(x);
        let c = self.mesh.coord_ij(i, j);
        let tx = ((x.x - c.x) / self.mesh.h1()).clamp(0.0, 1.0);
        let ty = ((x.y - c.y) / self.mesh.h2()).clamp(0.0, 1.0);
        let n2 = self.mesh.n2();
        let k = i * n2 + j;
        let (g00, g10, g01, g11) = (self.grad[k], self.grad[k + n2], self.grad[k + 1], self.grad[k + n2 + 1]);
        let g = g00 * ((1.0 - tx) * (1.0 - ty)) + g10 * (tx * (1.0 - ty)) + g01 * ((1.0 - tx) * ty) + g11 * (tx * ty);
        g.is_finite().then_some(g)
    }
}

/// Central differences where both neighbors along an axis are final,
/// second-order one-sided differences otherwise.
pub fn gradient(grid: &SolutionGrid) -> GradientGrid {
    let mesh = grid.mesh().clone();
    let (n1, n2) = (mesh.n1(), mesh.n2());
    let u = |i: isize, j: isize| -> Option<f64> {
        if i < 0 || j < 0 || i as usize >= n1 || j as usize >= n2 {
            return None;
        }
        let idx = i as usize * n2 + j as usize;
        if grid.is_final(idx) {
            grid.value(idx)
        } else {
            None
        }
    };
    let diff = |at: &dyn Fn(isize) -> Option<f64>, h: f64| -> f64 {
        let c = match at(0) {
            Some(c) => c,
            None => return f64::NAN,
        };
        match (at(-1), at(1)) {
            (Some(m), Some(p)) => (p - m) / (2.0 * h),
            _ => match (at(1), at(2), at(-1), at(-2)) {
                (Some(p1), Some(p2), _, _) => (-3.0 * c + 4.0 * p1 - p2) / (2.0 * h),
                (_, _, Some(m1), Some(m2)) => (3.0 * c - 4.0 * m1 + m2) / (2.0 * h),
                _ => f64::NAN,
            },
        }
    };
    let mut grad = Vec::with_capacity(mesh.len());
    for i in 0..n1 as isize {
        for j in 0..n2 as isize {
            let gx = diff(&|d| u(i + d, j), mesh.h1());
            let gy = diff(&|d| u(i, j + d), mesh.h2());
            grad.push(Vec2::new(gx, gy));
        }
    }
    GradientGrid { mesh, grad }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathStatus {
    ReachedAttractor,
    /// Left the mesh or the region where the gradient is known.
    LeftDomain,
    MaxSteps,
    /// `b + grad U` vanished away from the attractor.
    Stalled,
}

/// A polyline traced from the start point toward the attractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub points: Vec<Vec2>,
    pub status: PathStatus,
    /// Arclength step of the integrator.
    pub step: f64,
}

impl Path {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    /// Action of the path run forward, from the attractor end to the start.
    pub fn action(&self, field: &VectorField) -> Result<f64, FieldError> {
        let forward: Vec<Vec2> = self.points.iter().rev().copied().collect();
        geometric_action(&forward, field)
    }
}

/// Stop radius and step of [`trace_map`] as multiples of the mesh step.
pub const MAP_STOP_RADIUS: f64 = 1.0;
pub const MAP_STEP: f64 = 0.25;
pub const MAP_MAX_STEPS: usize = 1_000_000;

fn nearest_on_attractor(attractor: &Init, x: Vec2) -> Vec2 {
    match attractor {
        Init::EquilibriumPoint(p) => *p,
        Init::LimitCycle(poly) => {
            let n = poly.len();
            let mut best = (f64::INFINITY, x);
            for k in 0..n {
                let (a, b) = (poly[k], poly[(k + 1) % n]);
                let e = b - a;
                let t = if e.norm_sq() > 0.0 { ((x - a).dot(e) / e.norm_sq()).clamp(0.0, 1.0) } else { 0.0 };
                let p = a + e * t;
                let d = p.dist(x);
                if d < best.0 {
                    best = (d, p);
                }
            }
            best.1
        }
    }
}

/// Appends the straight segment from the last point to `target` in pieces
/// no longer than `step`.
fn walk_to(points: &mut Vec<Vec2>, target: Vec2, step: f64) {
    let from = *points.last().unwrap();
    let pieces = (from.dist(target) / step).ceil() as usize;
    for k in 1..=pieces {
        points.push(target.lerp_toward(from, k as f64 / pieces as f64));
    }
}

/// Follows `phi' = -(b + grad U)` from `start`, normalized to unit speed,
/// with classical RK4 at arclength step `0.25 h` and a bilinearly
/// interpolated gradient. Stops within `h` of the attractor and then
/// walks straight to the nearest attractor point.
pub fn trace_map(
    grid: &SolutionGrid,
    grad: &GradientGrid,
    field: &VectorField,
    attractor: &Init,
    start: Vec2,
) -> Result<Path, PostprocessError> {
    let mesh = grid.mesh();
    if !start.is_finite() || !mesh.contains(start) {
        return Err(PostprocessError::OutsideDomain { x: start.x, y: start.y });
    }
    let h = mesh.h();
    let step = MAP_STEP * h;
    let stop = MAP_STOP_RADIUS * h;
    let mut points = vec![start];
    let foot = nearest_on_attractor(attractor, start);
    if foot.dist(start) <= stop {
        walk_to(&mut points, foot, step);
        return Ok(Path { points, status: PathStatus::ReachedAttractor, step });
    }
    if grad.interpolate(start).is_none() {
        return Err(PostprocessError::Unset { x: start.x, y: start.y });
    }

    // None: outside the known region. Some(None): stalled.
    let dir = |x: Vec2| -> Option<Option<Vec2>> {
        let g = grad.interpolate(x)?;
        let b = field.eval(x).ok()?;
        Some((-(b + g)).normalized().filter(|_| (b + g).norm() > 1e-12 * (1.0 + b.norm())))
    };
    let mut x = start;
    let mut status = PathStatus::MaxSteps;
    for _ in 0..MAP_MAX_STEPS {
        let stage = |p: Vec2| dir(p);
        let k1 = match stage(x) {
            Some(Some(v)) => v,
            Some(None) => {
                status = PathStatus::Stalled;
                break;
            }
            None => {
                status = PathStatus::LeftDomain;
                break;
            }
        };
        let mut ks = [k1, Vec2::ZERO, Vec2::ZERO, Vec2::ZERO];
        let mut broke = None;
        for (s, c) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
            match stage(x + ks[s - 1] * (c * step)) {
                Some(Some(v)) => ks[s] = v,
                Some(None) => {
                    broke = Some(PathStatus::Stalled);
                    break;
                }
                None => {
                    broke = Some(PathStatus::LeftDomain);
                    break;
                }
            }
        }
        if let Some(s) = broke {
            status = s;
            break;
        }
        x += (ks[0] + ks[1] * 2.0 + ks[2] * 2.0 + ks[3]) * (step / 6.0);
        if !mesh.contains(x) {
            status = PathStatus::LeftDomain;
            break;
        }
        points.push(x);
        let foot = nearest_on_attractor(attractor, x);
        if foot.dist(x) <= stop {
            walk_to(&mut points, foot, step);
            status = PathStatus::ReachedAttractor;
            break;
        }
    }
    Ok(Path { points, status, step })
}

/// Geometric action of a polyline, trapezoid rule on each segment with `b`
/// at the segment ends. Zero for fewer than two points.
pub fn geometric_action(points: &[Vec2], field: &VectorField) -> Result<f64, FieldError> {
    let mut total = 0.0;
    let mut prev = match points.first() {
        Some(&p) => (p, field.eval(p)?),
        None => return Ok(0.0),
    };
    for &p in &points[1..] {
        let b = field.eval(p)?;
        let d = p - prev.0;
        let l = d.norm();
        total += 0.5 * ((prev.1.norm() * l - prev.1.dot(d)) + (b.norm() * l - b.dot(d)));
        prev = (p, b);
    }
    Ok(total)
}

/// Discrete Freidlin-Wentzell action `1/2 sum |dphi/dt - b|^2 dt` for a
/// polyline with node times `times`, `b` taken at segment midpoints.
pub fn fw_action(points: &[Vec2], times: &[f64], field: &VectorField) -> Result<f64, FieldError> {
    let mut total = 0.0;
    for k in 1..points.len().min(times.len()) {
        let dt = times[k] - times[k - 1];
        let b = field.eval(points[k - 1].midpoint(points[k]))?;
        let v = (points[k] - points[k - 1]) / dt;
        total += 0.5 * (v - b).norm_sq() * dt;
    }
    Ok(total)
}

/// Node times that make the speed on each segment equal `|b|` at its
/// midpoint, the parametrization minimizing [`fw_action`] for the given
/// geometry. Segments with vanishing `b` get infinite duration.
pub fn fw_optimal_times(points: &[Vec2], field: &VectorField) -> Result<Vec<f64>, FieldError> {
    let mut t = vec![0.0; points.len()];
    for k in 1..points.len() {
        let b = field.eval(points[k - 1].midpoint(points[k]))?;
        t[k] = t[k - 1] + points[k].dist(points[k - 1]) / b.norm();
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub max_abs: f64,
    pub rms: f64,
    /// Points compared.
    pub count: usize,
}

/// Max and RMS of `|U - exact|` over finalized points.
pub fn error_metrics(grid: &SolutionGrid, exact: impl Fn(Vec2) -> f64) -> ErrorMetrics {
    let mesh = grid.mesh();
    let mut max_abs = 0.0f64;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for idx in 0..mesh.len() {
        if !grid.is_final(idx) {
            continue;
        }
        let Some(u) = grid.value(idx) else { continue };
        let e = (u - exact(mesh.coord(idx))).abs();
        max_abs = max_abs.max(e);
        sum_sq += e * e;
        count += 1;
    }
    let rms = if count > 0 { (sum_sq / count as f64).sqrt() } else { 0.0 };
    ErrorMetrics { max_abs, rms, count }
}

/// `E = c N^(-q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub c: f64,
    pub q: f64,
}

/// Least squares on `(ln N, ln E)`.
pub fn fit_power_law(ns: &[f64], es: &[f64]) -> Result<PowerLaw, PostprocessError> {
    if ns.len() != es.len() {
        return Err(PostprocessError::FitInput(format!("{} sizes but {} errors", ns.len(), es.len())));
    }
    if ns.len() < 2 {
        return Err(PostprocessError::FitInput(format!("need at least 2 samples, got {}", ns.len())));
    }
    if let Some(bad) = ns.iter().chain(es).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(PostprocessError::FitInput(format!("inputs must be positive, got {bad}")));
    }
    let pts: Vec<(f64, f64)> = ns.iter().zip(es).map(|(n, e)| (n.ln(), e.ln())).collect();
    let slope = least_squares_slope(&pts);
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    Ok(PowerLaw { c: (my - slope * mx).exp(), q: -slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::PointState;
    use proptest::prelude::*;

    fn sampled(mesh: &Mesh, f: impl Fn(Vec2) -> f64) -> SolutionGrid {
        let values = (0..mesh.len()).map(|i| f(mesh.coord(i))).collect();
        SolutionGrid::from_parts(mesh.clone(), values, vec![PointState::Accepted; mesh.len()], None, None).unwrap()
    }

    #[test]
    fn gradient_exact_on_quadratics() {
        let mesh = Mesh::square(-1.0, 1.0, 21).unwrap();
        let g = gradient(&sampled(&mesh, |x| 2.0 * x.x * x.x + x.y * x.y + 0.3 * x.x * x.y));
        for idx in 0..mesh.len() {
            let x = mesh.coord(idx);
            let want = Vec2::new(4.0 * x.x + 0.3 * x.y, 2.0 * x.y + 0.3 * x.x);
            let got = g.get(idx).unwrap();
            assert!((got - want).norm() < 1e-12, "{x:?}: {got:?}");
        }
        let flat = gradient(&sampled(&mesh, |_| 3.0));
        assert!((0..mesh.len()).all(|i| flat.get(i).unwrap().norm() < 1e-12));
    }

    #[test]
    fn gradient_of_limit_cycle_potential() {
        let mesh = Mesh::square(-2.0, 2.0, 401).unwrap();
        let g = gradient(&sampled(&mesh, |x| 0.5 * (x.norm_sq() - 1.0).powi(2)));
        let idx = mesh.index(310, 200).unwrap();
        assert!((mesh.coord(idx) - Vec2::new(1.1, 0.0)).norm() < 1e-12);
        let v = g.get(idx).unwrap();
        assert!((v.x - 0.462).abs() < 1e-3 && v.y.abs() < 1e-12);
    }

    #[test]
    fn gradient_skips_unset_points() {
        let mesh = Mesh::square(0.0, 1.0, 7).unwrap();
        let hole = mesh.index(3, 3).unwrap();
        let mut values: Vec<f64> = (0..49).map(|i| mesh.coord(i).x).collect();
        values[hole] = f64::INFINITY;
        let mut states = vec![PointState::Accepted; 49];
        states[hole] = PointState::Unknown;
        let g = gradient(&SolutionGrid::from_parts(mesh.clone(), values, states, None, None).unwrap());
        assert!(g.get(hole).is_none());
        // Neighbors fall back to one-sided differences.
        for idx in [mesh.index(3, 2).unwrap(), mesh.index(2, 3).unwrap()] {
            let v = g.get(idx).unwrap();
            assert!((v.x - 1.0).abs() < 1e-12 && v.y.abs() < 1e-12);
        }
    }

    #[test]
    fn action_examples() {
        let f = VectorField::linear(0.0);
        let pts: Vec<Vec2> = (0..=10_000).map(|k| Vec2::new(k as f64 / 1e4, 0.0)).collect();
        assert!((geometric_action(&pts, &f).unwrap() - 2.0).abs() < 1e-6);
        assert_eq!(geometric_action(&[Vec2::new(0.3, 0.3)], &f).unwrap(), 0.0);
        assert_eq!(geometric_action(&[], &f).unwrap(), 0.0);
        // Along a trajectory of the flow itself.
        let flow: Vec<Vec2> = (0..=1000).map(|k| Vec2::new((-2.0 * k as f64 / 1e3).exp(), 0.0)).collect();
        assert!(geometric_action(&flow, &f).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fw_action_with_optimal_times_matches_geometric() {
        let f = VectorField::linear(10.0);
        let pts: Vec<Vec2> = (0..=2000).map(|k| {
            let t = k as f64 / 2000.0;
            Vec2::new(0.2 + 0.5 * t, 0.1 + 0.3 * t * t)
        }).collect();
        let geo = geometric_action(&pts, &f).unwrap();
        let fw = fw_action(&pts, &fw_optimal_times(&pts, &f).unwrap(), &f).unwrap();
        assert!((geo - fw).abs() < 1e-5 * geo, "{geo} vs {fw}");
    }

    #[test]
    fn metrics_examples() {
        let mesh = Mesh::square(-1.0, 1.0, 11).unwrap();
        let exact = |x: Vec2| 2.0 * x.x * x.x + x.y * x.y;
        let m = error_metrics(&sampled(&mesh, exact), exact);
        assert_eq!((m.max_abs, m.rms, m.count), (0.0, 0.0, 121));
        let m = error_metrics(&sampled(&mesh, |x| exact(x) + 0.01), exact);
        assert!((m.max_abs - 0.01).abs() < 1e-15 && (m.rms - 0.01).abs() < 1e-15);
    }

    #[test]
    fn power_law_examples() {
        let ns = [64.0, 128.0, 256.0];
        let es: Vec<f64> = ns.iter().map(|n: &f64| 3.0 * n.powi(-2)).collect();
        let p = fit_power_law(&ns, &es).unwrap();
        assert!((p.c - 3.0).abs() < 1e-12 && (p.q - 2.0).abs() < 1e-12, "{p:?}");
        let p = fit_power_law(&ns, &[0.5, 0.5, 0.5]).unwrap();
        assert!(p.q.abs() < 1e-15);
        assert!(fit_power_law(&ns, &[0.5, 0.0, 0.5]).is_err());
        assert!(fit_power_law(&ns, &[0.5]).is_err());
    }

    #[test]
    fn trace_from_attractor_is_trivial() {
        let mesh = Mesh::square(-1.0, 1.0, 11).unwrap();
        let grid = sampled(&mesh, |x| 2.0 * x.x * x.x + x.y * x.y);
        let g = gradient(&grid);
        let f = VectorField::linear(10.0);
        let init = Init::EquilibriumPoint(Vec2::ZERO);
        let p = trace_map(&grid, &g, &f, &init, Vec2::ZERO).unwrap();
        assert_eq!(p.status, PathStatus::ReachedAttractor);
        assert_eq!(p.points.len(), 1);
        assert_eq!(p.action(&f).unwrap(), 0.0);
        assert!(matches!(
            trace_map(&grid, &g, &f, &init, Vec2::new(2.0, 0.0)),
            Err(PostprocessError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn trace_on_exact_grid() {
        let mesh = Mesh::square(-1.0, 1.0, 201).unwrap();
        let grid = sampled(&mesh, |x| 2.0 * x.x * x.x + x.y * x.y);
        let g = gradient(&grid);
        let f = VectorField::linear(10.0);
        let p = trace_map(&grid, &g, &f, &Init::EquilibriumPoint(Vec2::ZERO), Vec2::new(0.0, 0.9)).unwrap();
        assert_eq!(p.status, PathStatus::ReachedAttractor);
        assert!(p.points.windows(2).all(|w| w[0].dist(w[1]) <= p.step * (1.0 + 1e-9)));
        assert_eq!(*p.points.last().unwrap(), Vec2::ZERO);
        let a = p.action(&f).unwrap();
        assert!((a - 0.81).abs() < 0.01 * 0.81, "{a}");
    }

    proptest! {
        #[test]
        fn fw_action_bounds_geometric(
            seed in prop::collection::vec((-0.9f64..0.9, -0.9f64..0.9), 3..12),
            speeds in prop::collection::vec(0.1f64..5.0, 12),
        ) {
            let f = VectorField::limit_cycle();
            let pts: Vec<Vec2> = seed.iter().map(|&(a, b)| Vec2::new(a, b)).collect();
            // Midpoint geometric action: the FW lower bound for this quadrature.
            let mut geo = 0.0;
            for w in pts.windows(2) {
                let b = f.eval(w[0].midpoint(w[1])).unwrap();
                geo += b.norm() * w[0].dist(w[1]) - b.dot(w[1] - w[0]);
            }
            let mut t = vec![0.0];
            for (k, w) in pts.windows(2).enumerate() {
                t.push(t[k] + w[0].dist(w[1]) / speeds[k]);
            }
            let fw = fw_action(&pts, &t, &f).unwrap();
            prop_assert!(fw >= geo - 1e-12 * (1.0 + geo.abs()));
            let opt = fw_action(&pts, &fw_optimal_times(&pts, &f).unwrap(), &f).unwrap();
            prop_assert!((opt - geo).abs() <= 1e-10 * (1.0 + geo.abs()));
        }

        #[test]
        fn gradient_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, p in -2.0f64..2.0, q in -2.0f64..2.0) {
            let mesh = Mesh::square(-1.0, 1.0, 9).unwrap();
            let f1 = move |x: Vec2| (p * x.x).sin() + x.y * x.y * x.y;
            let f2 = move |x: Vec2| (q * x.y).exp() * x.x;
            let g1 = gradient(&sampled(&mesh, f1));
            let g2 = gradient(&sampled(&mesh, f2));
            let gs = gradient(&sampled(&mesh, move |x| a * f1(x) + b * f2(x)));
            for idx in 0..mesh.len() {
                let want = g1.get(idx).unwrap() * a + g2.get(idx).unwrap() * b;
                prop_assert!((gs.get(idx).unwrap() - want).norm() < 1e-9);
            }
        }

        #[test]
        fn midpoint_refinement_changes_action_little(
            seed in prop::collection::vec((-0.9f64..0.9, -0.9f64..0.9), 2..6),
        ) {
            let f = VectorField::linear(10.0);
            // Fine polyline through the seeds.
            let mut pts = Vec::new();
            for w in seed.windows(2) {
                let (a, b) = (Vec2::new(w[0].0, w[0].1), Vec2::new(w[1].0, w[1].1));
                for k in 0..200 {
                    pts.push(b.lerp_toward(a, k as f64 / 200.0));
                }
            }
            pts.push(Vec2::new(seed[seed.len() - 1].0, seed[seed.len() - 1].1));
            let mut fine = vec![pts[0]];
            let mut seg_max: f64 = 0.0;
            for w in pts.windows(2) {
                fine.push(w[0].midpoint(w[1]));
                fine.push(w[1]);
                seg_max = seg_max.max(w[0].dist(w[1]));
            }
            let coarse = geometric_action(&pts, &f).unwrap();
            let refined = geometric_action(&fine, &f).unwrap();
            let total_len: f64 = pts.windows(2).map(|w| w[0].dist(w[1])).sum();
            prop_assert!((coarse - refined).abs() <= 100.0 * seg_max * seg_max * total_len + 1e-12);
        }
    }
}
