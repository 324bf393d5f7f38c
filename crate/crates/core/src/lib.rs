//! Quasi-potential solvers for two-dimensional SDEs `dx = b(x) dt + sqrt(eps) dW`
//! on regular rectangular meshes.
//!
//! The ordered line integral methods (OLIMs) compute the quasi-potential with
//! respect to a stable equilibrium or an attracting limit cycle by a
//! Dijkstra-like sweep in which each mesh point minimizes a quadrature of the
//! geometric action over nearby segments of the accepted front.
//!
//! ```
//! use olim::{solve, Init, Mesh, Method, QuadRule, SolverConfig, Vec2, VectorField};
//!
//! let mesh = Mesh::square(-1.0, 1.0, 65).unwrap();
//! let field = VectorField::linear(10.0);
//! let cfg = SolverConfig::new(Method::Olim(QuadRule::Midpoint), 6, Init::EquilibriumPoint(Vec2::ZERO));
//! let grid = solve(&mesh, &field, &cfg).unwrap();
//! let center = mesh.index(32, 32).unwrap();
//! assert_eq!(grid.value(center), Some(0.0));
//! ```

pub mod field;
pub mod geom;
pub mod heap;
pub mod mesh;
pub mod postprocess;
pub mod quadrature;
pub mod solver;
pub mod updates;

pub use field::{ExactSolution, FieldError, Jacobian2x2, VectorField};
pub use geom::Vec2;
pub use mesh::{Mesh, MeshError, PointState};
pub use postprocess::{
    error_metrics, fit_power_law, geometric_action, gradient, trace_map, ErrorMetrics, GradientGrid, Path,
    PathStatus, PowerLaw,
};
pub use quadrature::{segment_action, QuadRule};
pub use solver::{
    rule_of_thumb_k, solve, solve_audited, Init, Method, SolutionGrid, SolveError, SolverConfig, StopPolicy,
};
pub use updates::{one_point_update, oum_triangle_update, triangle_update, UpdateCandidate, UpdateKind};
