//! Single-panel quadrature of the geometric-action integrand
//! `|b| - b.v` along a straight segment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, VectorField};
use crate::geom::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuadRule {
    RightHand,
    Midpoint,
    Trapezoid,
    Simpson,
}

impl QuadRule {
    pub const ALL: [QuadRule; 4] = [
        QuadRule::RightHand,
        QuadRule::Midpoint,
        QuadRule::Trapezoid,
        QuadRule::Simpson,
    ];

    pub fn needs_start(self) -> bool {
        matches!(self, QuadRule::Trapezoid | QuadRule::Simpson)
    }

    pub fn needs_mid(self) -> bool {
        matches!(self, QuadRule::Midpoint | QuadRule::Simpson)
    }

    /// Leading power of the local error in the segment length.
    pub fn local_order(self) -> u32 {
        match self {
            QuadRule::RightHand => 2,
            QuadRule::Midpoint | QuadRule::Trapezoid => 3,
            QuadRule::Simpson => 5,
        }
    }
}

/// The integrand `|b| - b.v` for a unit direction `v`.
#[inline]
pub fn integrand(b: Vec2, v: Vec2) -> f64 {
    b.norm() - b.dot(v)
}

/// Field samples along the segment `start -> end`. `b_start` and `b_mid` are
/// read only by the rules that need them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSamples {
    pub start: Vec2,
    pub end: Vec2,
    pub b_start: Vec2,
    pub b_mid: Vec2,
    pub b_end: Vec2,
}

impl SegmentSamples {
    /// Samples taken directly from `field` at the segment nodes.
    pub fn from_field(field: &VectorField, start: Vec2, end: Vec2) -> Result<Self, FieldError> {
        Ok(SegmentSamples {
            start,
            end,
            b_start: field.eval(start)?,
            b_mid: field.eval(start.midpoint(end))?,
            b_end: field.eval(end)?,
        })
    }
}

/// `|b| l - b.(x - x_s)`, one rectangle of the integrand.
#[inline]
pub(crate) fn panel(b: Vec2, chord: Vec2, len: f64) -> f64 {
    b.norm() * len - b.dot(chord)
}

/// Integral of the geometric-action integrand along the segment under `rule`.
pub fn segment_action(rule: QuadRule, s: &SegmentSamples) -> f64 {
    let chord = s.end - s.start;
    let len = chord.norm();
    if len == 0.0 {
        return 0.0;
    }
    let v = match rule {
        QuadRule::RightHand => panel(s.b_end, chord, len),
        QuadRule::Midpoint => panel(s.b_mid, chord, len),
        QuadRule::Trapezoid => 0.5 * (panel(s.b_start, chord, len) + panel(s.b_end, chord, len)),
        QuadRule::Simpson => {
            (panel(s.b_start, chord, len)
                + 4.0 * panel(s.b_mid, chord, len)
                + panel(s.b_end, chord, len))
                / 6.0
        }
    };
    // Each panel is non-negative up to rounding.
    v.max(0.0)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrderError {
    #[error("segment action exact within round-off at all tested lengths")]
    ExactWithinRoundoff,
    #[error("field is zero at the segment start")]
    ZeroField,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Composite Simpson reference for the segment integral, `panels` even.
pub fn composite_simpson(
    field: &VectorField,
    start: Vec2,
    end: Vec2,
    panels: usize,
) -> Result<f64, FieldError> {
    let panels = panels + panels % 2;
    let chord = end - start;
    let len = chord.norm();
    if len == 0.0 {
        return Ok(0.0);
    }
    let v = chord / len;
    let dt = len / panels as f64;
    let mut acc = 0.0;
    for k in 0..=panels {
        let w = if k == 0 || k == panels {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * integrand(field.eval(start + v * (k as f64 * dt))?, v);
    }
    Ok(acc * dt / 3.0)
}

/// Lengths used by [`empirical_order`]: `0.2 * 2^-k`, `k = 0..6`.
pub const ORDER_LENGTHS: [f64; 6] = [0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625];

/// Fits `|error(l)| ~ C l^p` over [`ORDER_LENGTHS`] for the single-panel rule
/// against a 10^4-panel composite Simpson reference and returns `p`.
pub fn empirical_order(
    rule: QuadRule,
    field: &VectorField,
    x0: Vec2,
    direction: Vec2,
) -> Result<f64, OrderError> {
    if field.eval(x0)?.norm() == 0.0 {
        return Err(OrderError::ZeroField);
    }
    let v = direction.normalized().unwrap_or(Vec2::new(1.0, 0.0));
    let mut pts = Vec::new();
    for &l in &ORDER_LENGTHS {
        let end = x0 + v * l;
        let approx = segment_action(rule, &SegmentSamples::from_field(field, x0, end)?);
        let reference = composite_simpson(field, x0, end, 10_000)?;
        let err = (approx - reference).abs();
        if err > 1e-14 {
            pts.push((l.ln(), err.ln()));
        }
    }
    if pts.len() < 2 {
        return Err(OrderError::ExactWithinRoundoff);
    }
    Ok(least_squares_slope(&pts))
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
