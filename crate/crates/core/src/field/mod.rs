//! Drift fields `b(x)` of 2D SDEs `dx = b(x) dt + sqrt(eps) dW`.

mod expr;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use expr::{BinOp, FieldExpr, Func, Var};

use crate::geom::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function '{name}' takes {expected} argument(s), got {found} (offset {offset})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("domain error at offset {offset}: {message}")]
    Domain { offset: usize, message: String },
    #[error("unknown built-in field '{0}'")]
    UnknownBuiltin(String),
    #[error("field value is not finite at ({0}, {1})")]
    NonFinite(f64, f64),
}

/// Entries of `db/dx`: rows are components of `b`, columns are `d/dx1`, `d/dx2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jacobian2x2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Jacobian2x2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Jacobian2x2 { a11, a12, a21, a22 }
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.a11 * v.x + self.a12 * v.y, self.a21 * v.x + self.a22 * v.y)
    }

    pub fn max_abs(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a21.abs()).max(self.a22.abs())
    }
}

type EvalFn = dyn Fn(Vec2) -> Vec2 + Send + Sync;
type JacFn = dyn Fn(Vec2) -> Jacobian2x2 + Send + Sync;

#[derive(Clone)]
enum Kind {
    /// `b = (-2 x1 - a x2, 2 a x1 - x2)`; quasi-potential `2 x1^2 + x2^2`.
    Linear { a: f64 },
    /// Unit-circle limit cycle; quasi-potential `(x1^2 + x2^2 - 1)^2 / 2`.
    LimitCycle,
    Expr { b1: FieldExpr, b2: FieldExpr },
    Custom { eval: Arc<EvalFn>, jac: Option<Arc<JacFn>> },
}

/// Immutable drift field with an optional analytic Jacobian.
#[derive(Clone)]
pub struct VectorField {
    name: String,
    kind: Kind,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField").field("name", &self.name).finish()
    }
}

/// Default rotation parameter of the linear benchmark.
pub const LINEAR_DEFAULT_A: f64 = 10.0;

impl VectorField {
    pub fn linear(a: f64) -> Self {
        VectorField { name: format!("linear(a={a})"), kind: Kind::Linear { a } }
    }

    pub fn limit_cycle() -> Self {
        VectorField { name: "limit_cycle".into(), kind: Kind::LimitCycle }
    }

    /// Built-in field by registry name: `linear` (parameter `a`, default 10)
    /// or `limit_cycle` (no parameter).
    pub fn builtin(name: &str, param: Option<f64>) -> Result<Self, FieldError> {
        match name {
            "linear" => Ok(Self::linear(param.unwrap_or(LINEAR_DEFAULT_A))),
            "limit_cycle" => Ok(Self::limit_cycle()),
            other => Err(FieldError::UnknownBuiltin(other.to_string())),
        }
    }

    /// Field from two component expressions in `x1`, `x2`.
    pub fn parse(expr1: &str, expr2: &str) -> Result<Self, FieldError> {
        let b1 = FieldExpr::parse(expr1)?;
        let b2 = FieldExpr::parse(expr2)?;
        Ok(VectorField {
            name: format!("expr({expr1}; {expr2})"),
            kind: Kind::Expr { b1, b2 },
        })
    }

    pub fn from_fn<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(Vec2) -> Vec2 + Send + Sync + 'static,
    {
        VectorField {
            name: name.into(),
            kind: Kind::Custom { eval: Arc::new(f), jac: None },
        }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(Vec2) -> Jacobian2x2 + Send + Sync + 'static,
    {
        if let Kind::Custom { jac: slot, .. } = &mut self.kind {
            *slot = Some(Arc::new(jac));
        }
        self
    }

    pub fn constant(b: Vec2) -> Self {
        VectorField::from_fn(format!("constant({}, {})", b.x, b.y), move |_| b)
            .with_jacobian(|_| Jacobian2x2::default())
    }

    pub fn zero() -> Self {
        VectorField::constant(Vec2::ZERO)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: Vec2) -> Result<Vec2, FieldError> {
        let b = match &self.kind {
            Kind::Linear { a } => Vec2::new(-2.0 * x.x - a * x.y, 2.0 * a * x.x - x.y),
            Kind::LimitCycle => {
                let damp = 1.0 - x.x * x.x - x.y * x.y;
                Vec2::new(x.y + x.x * damp, -x.x + x.y * damp)
            }
            Kind::Expr { b1, b2 } => Vec2::new(b1.eval(x)?, b2.eval(x)?),
            Kind::Custom { eval, .. } => eval(x),
        };
        if !b.is_finite() {
            return Err(FieldError::NonFinite(x.x, x.y));
        }
        Ok(b)
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        match &self.kind {
            Kind::Linear { .. } | Kind::LimitCycle => true,
            Kind::Custom { jac, .. } => jac.is_some(),
            Kind::Expr { .. } => false,
        }
    }

    /// Analytic Jacobian when available, central differences otherwise.
    pub fn jacobian(&self, x: Vec2) -> Result<Jacobian2x2, FieldError> {
        match &self.kind {
            Kind::Linear { a } => Ok(Jacobian2x2::new(-2.0, -a, 2.0 * a, -1.0)),
            Kind::LimitCycle => {
                let (p, q) = (x.x, x.y);
                Ok(Jacobian2x2::new(
                    1.0 - 3.0 * p * p - q * q,
                    1.0 - 2.0 * p * q,
                    -1.0 - 2.0 * p * q,
                    1.0 - p * p - 3.0 * q * q,
                ))
            }
            Kind::Custom { jac: Some(j), .. } => Ok(j(x)),
            _ => self.fd_jacobian(x),
        }
    }

    /// Central-difference Jacobian with step `eps^(1/3) * max(1, |x_k|)` per
    /// component.
    pub fn fd_jacobian(&self, x: Vec2) -> Result<Jacobian2x2, FieldError> {
        let cbrt_eps = f64::EPSILON.cbrt();
        let h1 = cbrt_eps * x.x.abs().max(1.0);
        let h2 = cbrt_eps * x.y.abs().max(1.0);
        let d1 = (self.eval(Vec2::new(x.x + h1, x.y))? - self.eval(Vec2::new(x.x - h1, x.y))?)
            / (2.0 * h1);
        let d2 = (self.eval(Vec2::new(x.x, x.y + h2))? - self.eval(Vec2::new(x.x, x.y - h2))?)
            / (2.0 * h2);
        Ok(Jacobian2x2::new(d1.x, d2.x, d1.y, d2.y))
    }
}

/// Analytic quasi-potential of a built-in benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactSolution {
    /// `2 x1^2 + x2^2`, exact for the linear benchmark with any `a`.
    Linear,
    /// `(x1^2 + x2^2 - 1)^2 / 2`.
    LimitCycle,
}

impl ExactSolution {
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "linear" => Some(ExactSolution::Linear),
            "limit_cycle" => Some(ExactSolution::LimitCycle),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExactSolution::Linear => "linear",
            ExactSolution::LimitCycle => "limit_cycle",
        }
    }

    pub fn value(self, x: Vec2) -> f64 {
        match self {
            ExactSolution::Linear => 2.0 * x.x * x.x + x.y * x.y,
            ExactSolution::LimitCycle => {
                let r2m1 = x.x * x.x + x.y * x.y - 1.0;
                0.5 * r2m1 * r2m1
            }
        }
    }

    pub fn gradient(self, x: Vec2) -> Vec2 {
        match self {
            ExactSolution::Linear => Vec2::new(4.0 * x.x, 2.0 * x.y),
            ExactSolution::LimitCycle => x * (2.0 * (x.x * x.x + x.y * x.y - 1.0)),
        }
    }
}
