//! Finite-difference upwind triangle update.
//!
//! `U` is taken linear on the triangle `(x0, x1, x)`, which fixes its
//! gradient as an affine function of the unknown value `u` at `x`. The value
//! then solves `|grad U|^2 + 2 b.grad U = 0` with `b = b(x)`, subject to the
//! characteristic direction `b + grad U` entering `x` through the base.

use super::{UpdateCandidate, UpdateKind};
use crate::geom::Vec2;

pub fn oum_triangle_update(x1: Vec2, u1: f64, x0: Vec2, u0: f64, x: Vec2, b: Vec2) -> UpdateCandidate {
    let fail = UpdateCandidate::failed(UpdateKind::Triangle);
    // Rows of P are the edges x - x0 and x - x1; P grad U = (u - u0, u - u1).
    let e0 = x - x0;
    let e1 = x - x1;
    let det = e0.cross(e1);
    let scale = e0.norm() * e1.norm();
    if !(det.abs() > 1e-12 * scale) {
        return fail;
    }
    let solve = |r0: f64, r1: f64| Vec2::new((r0 * e1.y - r1 * e0.y) / det, (e0.x * r1 - e1.x * r0) / det);
    let alpha = solve(1.0, 1.0);
    let beta = solve(u0, u1);

    let qa = alpha.norm_sq();
    let qb = b.dot(alpha) - alpha.dot(beta);
    let qc = beta.norm_sq() - 2.0 * b.dot(beta);
    let disc = qb * qb - qa * qc;
    if qa == 0.0 || disc < 0.0 {
        return fail;
    }
    let q = -(qb + qb.signum() * disc.sqrt());
    let roots = if q == 0.0 { [0.0, 0.0] } else { [q / qa, qc / q] };

    let floor = u0.min(u1);
    let mut best = fail;
    for u in roots {
        if !(u.is_finite() && u >= floor) || u >= best.value {
            continue;
        }
        // b + grad U = c0 (x - x0) + c1 (x - x1) = P^T c.
        let v = b + alpha * u - beta;
        let c0 = (v.x * e1.y - v.y * e1.x) / det;
        let c1 = (e0.x * v.y - e0.y * v.x) / det;
        if !(c0 > 0.0 && c1 > 0.0) {
            continue;
        }
        let s = c0 / (c0 + c1);
        best = UpdateCandidate {
            value: u,
            s_star: Some(s),
            kind: UpdateKind::Triangle,
            length: x.dist(x0.lerp_toward(x1, s)),
        };
    }
    best
}
