//! Local update formulas: the one-point update, the quadrature-based triangle
//! updates, and the finite-difference upwind triangle update.
//!
//! A triangle update at `x` minimizes, over `s` in `[0, 1]`,
//!
//! ```text
//! f(s) = s u0 + (1 - s) u1 + Q(x_s -> x),   x_s = s x0 + (1 - s) x1
//! ```
//!
//! where `Q` is a single-panel quadrature of the geometric-action integrand
//! and the field along the segment is linearly interpolated from samples at
//! `x0`, `x1` (start) and at the midpoints `(x0 + x)/2`, `(x1 + x)/2`.

mod oum;
mod root;

use serde::{Deserialize, Serialize};

pub use oum::oum_triangle_update;
pub use root::{hybrid_root, RootOutcome, RootProblem};

use crate::field::{FieldError, VectorField};
use crate::geom::Vec2;
use crate::quadrature::{segment_action, QuadRule, SegmentSamples};

/// Norms below this are treated as a vanishing field.
pub const SINGULAR_NORM: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UpdateKind {
    Init,
    OnePoint,
    Triangle,
}

/// A proposed value at `x`. `value` is `+inf` when the update fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateCandidate {
    pub value: f64,
    /// Minimizing barycentric weight of `x0`; triangle updates only.
    pub s_star: Option<f64>,
    pub kind: UpdateKind,
    /// Distance from `x` to the start of the minimizing segment.
    pub length: f64,
}

impl UpdateCandidate {
    pub fn failed(kind: UpdateKind) -> Self {
        UpdateCandidate { value: f64::INFINITY, s_star: None, kind, length: f64::NAN }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// `u0 + Q(x0 -> x)` with the field sampled at the quadrature nodes.
pub fn one_point_update(
    rule: QuadRule,
    x0: Vec2,
    u0: f64,
    x: Vec2,
    field: &VectorField,
) -> Result<UpdateCandidate, FieldError> {
    let samples = SegmentSamples::from_field(field, x0, x)?;
    Ok(one_point_from_samples(rule, u0, &samples))
}

#[inline]
pub fn one_point_from_samples(rule: QuadRule, u0: f64, samples: &SegmentSamples) -> UpdateCandidate {
    UpdateCandidate {
        value: u0 + segment_action(rule, samples),
        s_star: None,
        kind: UpdateKind::OnePoint,
        length: samples.end.dist(samples.start),
    }
}

/// Everything a triangle update reads: the two base points with their
/// values, the target point, and field samples. `b_x = b(x)`,
/// `b0 = b(x0)`, `b1 = b(x1)`, `bm0 = b((x0 + x)/2)`, `bm1 = b((x1 + x)/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleSamples {
    pub x0: Vec2,
    pub u0: f64,
    pub x1: Vec2,
    pub u1: f64,
    pub x: Vec2,
    pub b_x: Vec2,
    pub b0: Vec2,
    pub b1: Vec2,
    pub bm0: Vec2,
    pub bm1: Vec2,
}

impl TriangleSamples {
    pub fn from_field(
        field: &VectorField,
        x1: Vec2,
        u1: f64,
        x0: Vec2,
        u0: f64,
        x: Vec2,
    ) -> Result<Self, FieldError> {
        Ok(TriangleSamples {
            x0,
            u0,
            x1,
            u1,
            x,
            b_x: field.eval(x)?,
            b0: field.eval(x0)?,
            b1: field.eval(x1)?,
            bm0: field.eval(x0.midpoint(x))?,
            bm1: field.eval(x1.midpoint(x))?,
        })
    }

    #[inline]
    fn xs(&self, s: f64) -> Vec2 {
        self.x0.lerp_toward(self.x1, s)
    }

    /// Segment samples at barycentric weight `s`, interpolated linearly.
    #[inline]
    pub fn segment(&self, s: f64) -> SegmentSamples {
        SegmentSamples {
            start: self.xs(s),
            end: self.x,
            b_start: self.b0.lerp_toward(self.b1, s),
            b_mid: self.bm0.lerp_toward(self.bm1, s),
            b_end: self.b_x,
        }
    }

    /// The minimized function `f(s)`.
    pub fn objective(&self, rule: QuadRule, s: f64) -> f64 {
        s * self.u0 + (1.0 - s) * self.u1 + segment_action(rule, &self.segment(s))
    }

    /// `f'(s)`, or `None` where an interpolated field sample vanishes.
    pub fn derivative(&self, rule: QuadRule, s: f64) -> Option<f64> {
        let d = self.x1 - self.x0;
        let r = self.x - self.xs(s);
        let rn = r.norm();
        let rd = r.dot(d) / rn;
        // One term per quadrature node: weight, field at the node, and the
        // node field's derivative in s.
        let term = |w: f64, beta: Vec2, delta: Vec2, interpolated: bool| -> Option<f64> {
            let bn = beta.norm();
            let curv = if interpolated {
                if bn < SINGULAR_NORM {
                    return None;
                }
                beta.dot(delta) / bn * rn
            } else {
                0.0
            };
            Some(w * (curv + bn * rd - delta.dot(r) - beta.dot(d)))
        };
        let start = || (self.b0.lerp_toward(self.b1, s), self.b0 - self.b1);
        let mid = || (self.bm0.lerp_toward(self.bm1, s), self.bm0 - self.bm1);
        let du = self.u0 - self.u1;
        let q = match rule {
            QuadRule::RightHand => term(1.0, self.b_x, Vec2::ZERO, false)?,
            QuadRule::Midpoint => {
                let (bm, dm) = mid();
                term(1.0, bm, dm, true)?
            }
            QuadRule::Trapezoid => {
                let (bs, ds) = start();
                term(0.5, bs, ds, true)? + term(0.5, self.b_x, Vec2::ZERO, false)?
            }
            QuadRule::Simpson => {
                let (bs, ds) = start();
                let (bm, dm) = mid();
                term(1.0 / 6.0, bs, ds, true)?
                    + term(4.0 / 6.0, bm, dm, true)?
                    + term(1.0 / 6.0, self.b_x, Vec2::ZERO, false)?
            }
        };
        Some(du + q)
    }

    fn scale(&self) -> f64 {
        (self.u0 - self.u1).abs() + self.b_x.norm() * self.x1.dist(self.x0)
    }

    fn candidate(&self, rule: QuadRule, s: f64) -> UpdateCandidate {
        UpdateCandidate {
            value: self.objective(rule, s),
            s_star: Some(s),
            kind: UpdateKind::Triangle,
            length: self.x.dist(self.xs(s)),
        }
    }
}

/// Triangle update from base `[x1, x0]` to `x`, sampling `field`.
pub fn triangle_update(
    rule: QuadRule,
    x1: Vec2,
    u1: f64,
    x0: Vec2,
    u0: f64,
    x: Vec2,
    field: &VectorField,
) -> Result<UpdateCandidate, FieldError> {
    let t = TriangleSamples::from_field(field, x1, u1, x0, u0, x)?;
    Ok(triangle_from_samples(rule, &t))
}

/// Triangle update from prefetched samples. Returns `+inf` unless the
/// minimizer is interior to `(0, 1)`.
pub fn triangle_from_samples(rule: QuadRule, t: &TriangleSamples) -> UpdateCandidate {
    match rule {
        QuadRule::RightHand => right_hand_triangle(t),
        _ => root_triangle(rule, t),
    }
}

/// The right-hand rule makes the stationarity condition
/// `u0 - u1 + |b| (r.d)/|r| - b.d = 0` (with `r = x - x_s`, `d = x1 - x0`)
/// a quadratic in `s` after squaring; both roots are checked against the
/// unsquared equation.
fn right_hand_triangle(t: &TriangleSamples) -> UpdateCandidate {
    let fail = UpdateCandidate::failed(UpdateKind::Triangle);
    let b = t.b_x;
    let bn = b.norm();
    let d = t.x1 - t.x0;
    let w = t.x - t.x1;
    let dd = d.norm_sq();
    if bn < SINGULAR_NORM || dd == 0.0 {
        return fail;
    }
    let c = b.dot(d) - (t.u0 - t.u1);
    // A s^2 + 2 B s + C = 0 with A = dd k, B = (w.d) k, C = |b|^2 (w.d)^2 - c^2 |w|^2.
    // Its discriminant factors as k c^2 (w x d)^2, giving the closed form below.
    let k = bn * bn * dd - c * c;
    if k <= 0.0 {
        return fail;
    }
    let wd = w.dot(d);
    let spread = c.abs() * w.cross(d).abs() / k.sqrt();
    let tol = 1e-10 * bn * dd.sqrt();
    let mut best = fail;
    for s in [(-wd - spread) / dd, (-wd + spread) / dd] {
        if !(s > 0.0 && s < 1.0) {
            continue;
        }
        let r = t.x - t.xs(s);
        let residual = t.u0 - t.u1 + bn * r.dot(d) / r.norm() - b.dot(d);
        if residual.abs() > tol {
            continue;
        }
        let cand = t.candidate(QuadRule::RightHand, s);
        if cand.value < best.value {
            best = cand;
        }
    }
    best
}

fn root_triangle(rule: QuadRule, t: &TriangleSamples) -> UpdateCandidate {
    let fail = UpdateCandidate::failed(UpdateKind::Triangle);
    let (g0, g1) = match (t.derivative(rule, 0.0), t.derivative(rule, 1.0)) {
        (Some(a), Some(b)) => (a, b),
        _ => return fail,
    };
    // Interior minimizer of a function decreasing at 0 and increasing at 1.
    if !(g0 < 0.0 && g1 > 0.0) {
        return fail;
    }
    let mut singular = false;
    let mut g = |s: f64| match t.derivative(rule, s) {
        Some(v) => v,
        None => {
            singular = true;
            f64::NAN
        }
    };
    let tol_g = 1e-12 * t.scale();
    let outcome = root::hybrid_root_bracketed(&mut g, (0.0, g0), (1.0, g1), 1e-12, tol_g, 50);
    if singular {
        return fail;
    }
    match outcome.value() {
        Some(s) if s > 0.0 && s < 1.0 => t.candidate(rule, s),
        _ => fail,
    }
}
