//! Seeding the Considered set around the attractor.

use super::SolveError;
use crate::field::{Jacobian2x2, VectorField};
use crate::geom::Vec2;
use crate::mesh::Mesh;

/// A mesh point with its initial value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub idx: usize,
    pub value: f64,
}

/// Coefficients of the local quadratic `U(x) ~ A dx^2 + 2 B dx dy + C dy^2`
/// near a stable equilibrium with Jacobian `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadraticForm {
    /// Requires a stable `j`: negative trace and positive determinant.
    pub fn from_jacobian(j: &Jacobian2x2) -> Result<Self, SolveError> {
        let tr = j.trace();
        let det = j.det();
        if !(tr < 0.0 && det > 0.0) {
            return Err(SolveError::UnstableEquilibrium { trace: tr, det });
        }
        let rot = j.a21 - j.a12;
        let denom = tr * tr + rot * rot;
        let alpha = tr * tr / denom;
        let beta = rot * tr / denom;
        Ok(QuadraticForm {
            a: -(alpha * j.a11 + beta * j.a21),
            b: -(alpha * j.a12 + beta * j.a22),
            c: -(alpha * j.a22 - beta * j.a12),
        })
    }

    pub fn eval(&self, d: Vec2) -> f64 {
        self.a * d.x * d.x + 2.0 * self.b * d.x * d.y + self.c * d.y * d.y
    }
}

/// Seeds for a stable equilibrium `x0`: the quadratic approximation on the
/// four corners of the cell containing `x0`. If `x0` sits on a node, that
/// node gets 0 and its eight neighbors get the quadratic.
pub fn init_point(mesh: &Mesh, field: &VectorField, x0: Vec2) -> Result<Vec<Seed>, SolveError> {
    if !x0.is_finite() || !mesh.contains(x0) {
        return Err(SolveError::OutsideDomain { x: x0.x, y: x0.y });
    }
    let (x1r, x2r) = (mesh.x1_range(), mesh.x2_range());
    let corners = [
        Vec2::new(x1r.0, x2r.0),
        Vec2::new(x1r.1, x2r.0),
        Vec2::new(x1r.0, x2r.1),
        Vec2::new(x1r.1, x2r.1),
    ];
    let mut scale = 1.0f64;
    for c in corners {
        if let Ok(b) = field.eval(c) {
            scale = scale.max(b.norm());
        }
    }
    let residual = field.eval(x0)?.norm();
    if residual > 1e-8 * scale {
        return Err(SolveError::NotEquilibrium { residual });
    }
    let q = QuadraticForm::from_jacobian(&field.jacobian(x0)?)?;

    let (i, j) = mesh.cell_of(x0);
    let mut seeds = Vec::new();
    let on_node = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
        .into_iter()
        .find(|&(a, b)| mesh.coord_ij(a, b).dist(x0) <= 1e-12 * mesh.h());
    match on_node {
        Some((a, b)) => {
            let center = mesh.idx(a, b);
            seeds.push(Seed { idx: center, value: 0.0 });
            for n in mesh.neighbors8(center) {
                seeds.push(Seed { idx: n, value: q.eval(mesh.coord(n) - x0) });
            }
        }
        None => {
            for (a, b) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                let idx = mesh.idx(a, b);
                seeds.push(Seed { idx, value: q.eval(mesh.coord(idx) - x0) });
            }
        }
    }
    seeds.sort_by_key(|s| s.idx);
    Ok(seeds)
}

/// Mesh points in the union of the smallest mesh-aligned rectangles that
/// contain each polyline edge (closing edge included), in index order.
pub fn curve_neighborhood(mesh: &Mesh, polyline: &[Vec2]) -> Vec<usize> {
    let mut mask = vec![false; mesh.len()];
    let (x1r, x2r) = (mesh.x1_range(), mesh.x2_range());
    let n = polyline.len();
    for k in 0..n {
        let (p, q) = (polyline[k], polyline[(k + 1) % n]);
        let lo_i = ((p.x.min(q.x) - x1r.0) / mesh.h1()).floor();
        let hi_i = ((p.x.max(q.x) - x1r.0) / mesh.h1()).ceil();
        let lo_j = ((p.y.min(q.y) - x2r.0) / mesh.h2()).floor();
        let hi_j = ((p.y.max(q.y) - x2r.0) / mesh.h2()).ceil();
        let (max_i, max_j) = ((mesh.n1() - 1) as f64, (mesh.n2() - 1) as f64);
        if hi_i < 0.0 || hi_j < 0.0 || lo_i > max_i || lo_j > max_j {
            continue;
        }
        for i in lo_i.max(0.0) as usize..=hi_i.min(max_i) as usize {
            for j in lo_j.max(0.0) as usize..=hi_j.min(max_j) as usize {
                mask[mesh.idx(i, j)] = true;
            }
        }
    }
    (0..mesh.len()).filter(|&i| mask[i]).collect()
}

/// Foot point of `x` on the curve: project onto the line through the nearest
/// vertex and whichever adjacent vertex lies within a right angle of `x`.
pub fn curve_projection(polyline: &[Vec2], x: Vec2) -> Vec2 {
    let n = polyline.len();
    let mut k1 = 0;
    let mut best = f64::INFINITY;
    for (k, p) in polyline.iter().enumerate() {
        let d = p.dist(x);
        if d < best {
            best = d;
            k1 = k;
        }
    }
    let x1 = polyline[k1];
    let w = x - x1;
    let wn = w.norm();
    if wn == 0.0 {
        return x1;
    }
    let mut pick: Option<(f64, Vec2)> = None;
    for x2 in [polyline[(k1 + n - 1) % n], polyline[(k1 + 1) % n]] {
        let e = x2 - x1;
        let en = e.norm();
        if en == 0.0 {
            continue;
        }
        let cos = w.dot(e) / (wn * en);
        if cos >= 0.0 && pick.is_none_or(|(c, _)| cos > c) {
            pick = Some((cos, x2));
        }
    }
    match pick {
        Some((_, x2)) => {
            let e = x2 - x1;
            x1 + e * (w.dot(e) / e.norm_sq())
        }
        None => x1,
    }
}

/// Seeds around an attracting cycle. The gradient of `U` near the cycle is
/// estimated from the part of `b` transverse to the flow at the foot point,
/// and `U` is integrated from the foot point by Simpson's rule.
pub fn init_curve(mesh: &Mesh, field: &VectorField, polyline: &[Vec2]) -> Result<Vec<Seed>, SolveError> {
    if polyline.len() < 3 {
        return Err(SolveError::PolylineTooShort(polyline.len()));
    }
    if let Some(p) = polyline.iter().find(|p| !p.is_finite()) {
        return Err(SolveError::OutsideDomain { x: p.x, y: p.y });
    }
    let band = curve_neighborhood(mesh, polyline);
    if band.is_empty() {
        return Err(SolveError::EmptyNeighborhood);
    }
    band.into_iter()
        .map(|idx| Ok(Seed { idx, value: curve_seed_value(field, polyline, mesh.coord(idx))? }))
        .collect()
}

/// Initial value at `x` near the cycle `polyline`.
pub fn curve_seed_value(field: &VectorField, polyline: &[Vec2], x: Vec2) -> Result<f64, SolveError> {
    let xs = curve_projection(polyline, x);
    let len = x.dist(xs);
    if len == 0.0 {
        return Ok(0.0);
    }
    let bs = field.eval(xs)?;
    let bs2 = bs.norm_sq();
    if bs2 == 0.0 {
        return Err(SolveError::StagnantCurve { x: xs.x, y: xs.y });
    }
    let transverse = |y: Vec2| -> Result<f64, SolveError> {
        let b = field.eval(y)?;
        Ok((b - bs * (b.dot(bs) / bs2)).norm())
    };
    Ok(len * (4.0 * transverse(x.midpoint(xs))? + transverse(x)?) / 3.0)
}

/// `n` points on the circle of radius `r` about `center`, counterclockwise
/// from angle 0.
pub fn circle_polyline(center: Vec2, r: f64, n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            center + Vec2::new(t.cos(), t.sin()) * r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_benchmark_quadratic() {
        let j = VectorField::linear(10.0).jacobian(Vec2::ZERO).unwrap();
        let q = QuadraticForm::from_jacobian(&j).unwrap();
        assert!((q.a - 2.0).abs() < 1e-14 && q.b.abs() < 1e-14 && (q.c - 1.0).abs() < 1e-14, "{q:?}");
        assert!((q.eval(Vec2::new(0.1, 0.1)) - 0.03).abs() < 1e-15);
    }

    #[test]
    fn gradient_field_quadratic_is_distance_squared() {
        let j = Jacobian2x2::new(-1.0, 0.0, 0.0, -1.0);
        let q = QuadraticForm::from_jacobian(&j).unwrap();
        assert_eq!((q.a, q.b, q.c), (1.0, 0.0, 1.0));
    }

    #[test]
    fn unstable_and_non_equilibrium_rejected() {
        let mesh = Mesh::square(-1.0, 1.0, 11).unwrap();
        let source = VectorField::from_fn("source", |x| x);
        assert!(matches!(
            init_point(&mesh, &source, Vec2::ZERO),
            Err(SolveError::UnstableEquilibrium { .. })
        ));
        let saddle = VectorField::from_fn("saddle", |x| Vec2::new(x.x, -x.y));
        assert!(matches!(
            init_point(&mesh, &saddle, Vec2::ZERO),
            Err(SolveError::UnstableEquilibrium { .. })
        ));
        assert!(matches!(
            init_point(&mesh, &VectorField::linear(10.0), Vec2::new(0.5, 0.0)),
            Err(SolveError::NotEquilibrium { .. })
        ));
        assert!(matches!(
            init_point(&mesh, &VectorField::linear(10.0), Vec2::new(3.0, 0.0)),
            Err(SolveError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn node_equilibrium_seeds_node_and_ring() {
        let mesh = Mesh::square(-1.0, 1.0, 11).unwrap();
        let seeds = init_point(&mesh, &VectorField::linear(10.0), Vec2::ZERO).unwrap();
        assert_eq!(seeds.len(), 9);
        let center = mesh.index(5, 5).unwrap();
        for s in seeds {
            let x = mesh.coord(s.idx);
            if s.idx == center {
                assert_eq!(s.value, 0.0);
            }
            assert!((s.value - (2.0 * x.x * x.x + x.y * x.y)).abs() < 1e-15);
        }
    }

    #[test]
    fn off_node_equilibrium_seeds_cell_corners() {
        let mesh = Mesh::square(-1.05, 0.95, 21).unwrap();
        let seeds = init_point(&mesh, &VectorField::linear(10.0), Vec2::ZERO).unwrap();
        assert_eq!(seeds.len(), 4);
        for s in seeds {
            let x = mesh.coord(s.idx);
            assert!((x.x.abs() - 0.05).abs() < 1e-12 && (x.y.abs() - 0.05).abs() < 1e-12);
            assert!((s.value - (2.0 * x.x * x.x + x.y * x.y)).abs() < 1e-15);
        }
    }

    #[test]
    fn curve_seed_example() {
        let circle = circle_polyline(Vec2::ZERO, 1.0, 720);
        let f = VectorField::limit_cycle();
        let v = curve_seed_value(&f, &circle, Vec2::new(1.1, 0.0)).unwrap();
        assert!((v - 0.02205).abs() < 1e-12, "{v}");
        // Mesh on [-2, 2]^2 with h = 0.1 has a node at (1, 0), on the curve.
        let mesh = Mesh::square(-2.0, 2.0, 41).unwrap();
        let seeds = init_curve(&mesh, &f, &circle).unwrap();
        let on = mesh.index(30, 20).unwrap();
        assert_eq!(seeds.iter().find(|s| s.idx == on).unwrap().value, 0.0);
    }

    #[test]
    fn curve_projection_falls_back_to_vertex() {
        let tri = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        assert_eq!(curve_projection(&tri, Vec2::new(-1.0, -1.0)), Vec2::ZERO);
        assert_eq!(curve_projection(&tri, Vec2::new(0.5, -0.2)), Vec2::new(0.5, 0.0));
    }

    #[test]
    fn parallel_flow_gives_zero() {
        let mesh = Mesh::square(-2.0, 2.0, 21).unwrap();
        let circle = circle_polyline(Vec2::ZERO, 1.0, 100);
        let f = VectorField::constant(Vec2::new(1.0, 2.0));
        for s in init_curve(&mesh, &f, &circle).unwrap() {
            assert_eq!(s.value, 0.0);
        }
    }

    #[test]
    fn curve_errors() {
        let mesh = Mesh::square(-2.0, 2.0, 21).unwrap();
        let f = VectorField::limit_cycle();
        assert!(matches!(
            init_curve(&mesh, &f, &[Vec2::ZERO, Vec2::new(1.0, 0.0)]),
            Err(SolveError::PolylineTooShort(2))
        ));
        let far = circle_polyline(Vec2::new(10.0, 10.0), 1.0, 50);
        assert!(matches!(init_curve(&mesh, &f, &far), Err(SolveError::EmptyNeighborhood)));
    }
}
