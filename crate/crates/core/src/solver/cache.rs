//! Field samples on the half-step grid.
//!
//! Every quadrature node an update touches is a mesh node or the midpoint of
//! two mesh nodes, so sampling `b` once on the grid with steps `h1/2`, `h2/2`
//! covers all of them.

use crate::field::VectorField;
use crate::geom::Vec2;
use crate::mesh::Mesh;

pub(crate) struct FieldCache {
    n2: usize,
    stride: usize,
    samples: Vec<Vec2>,
    /// Samples where the field could not be evaluated; stored as NaN.
    pub failures: usize,
}

impl FieldCache {
    pub fn new(mesh: &Mesh, field: &VectorField) -> Self {
        let (m1, m2) = (2 * mesh.n1() - 1, 2 * mesh.n2() - 1);
        let (x1, x2) = (mesh.x1_range().0, mesh.x2_range().0);
        let (g1, g2) = (0.5 * mesh.h1(), 0.5 * mesh.h2());
        let mut samples = Vec::with_capacity(m1 * m2);
        let mut failures = 0;
        for a in 0..m1 {
            for b in 0..m2 {
                let x = Vec2::new(x1 + a as f64 * g1, x2 + b as f64 * g2);
                samples.push(field.eval(x).unwrap_or_else(|_| {
                    failures += 1;
                    Vec2::new(f64::NAN, f64::NAN)
                }));
            }
        }
        FieldCache { n2: mesh.n2(), stride: m2, samples, failures }
    }

    #[inline]
    pub fn node(&self, idx: usize) -> Vec2 {
        let (i, j) = (idx / self.n2, idx % self.n2);
        self.samples[2 * i * self.stride + 2 * j]
    }

    /// Sample at the midpoint of two nodes.
    #[inline]
    pub fn mid(&self, a: usize, b: usize) -> Vec2 {
        let (ia, ja) = (a / self.n2, a % self.n2);
        let (ib, jb) = (b / self.n2, b % self.n2);
        self.samples[(ia + ib) * self.stride + ja + jb]
    }
}
