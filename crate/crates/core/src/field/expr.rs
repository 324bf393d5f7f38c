//! A small arithmetic expression language over the variables `x1`, `x2`.
//!
//! Grammar (precedence low to high): `+ -` (left), `* /` (left), unary `-`,
//! `^` (right). Functions take one argument: `sin cos exp sqrt abs`.
//! Numeric literals accept an optional fraction and exponent (`1.5e-3`).

use std::fmt;

use super::FieldError;
use crate::geom::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X1,
    X2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    /// (left binding power, right binding power)
    fn binding(self) -> (u8, u8) {
        match self {
            BinOp::Add | BinOp::Sub => (10, 11),
            BinOp::Mul | BinOp::Div => (20, 21),
            BinOp::Pow => (41, 40),
        }
    }
}

const PREFIX_NEG_BP: u8 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Expression tree. `offset` fields hold the byte offset in the source text
/// and are used only for error reporting; equality ignores them.
#[derive(Debug, Clone)]
pub enum FieldExpr {
    Num(f64),
    Var(Var),
    Neg(Box<FieldExpr>),
    Bin {
        op: BinOp,
        lhs: Box<FieldExpr>,
        rhs: Box<FieldExpr>,
        offset: usize,
    },
    Call {
        func: Func,
        arg: Box<FieldExpr>,
        offset: usize,
    },
}

impl PartialEq for FieldExpr {
    fn eq(&self, other: &Self) -> bool {
        use FieldExpr::*;
        match (self, other) {
            (Num(a), Num(b)) => a.to_bits() == b.to_bits(),
            (Var(a), Var(b)) => a == b,
            (Neg(a), Neg(b)) => a == b,
            (Bin { op: o1, lhs: l1, rhs: r1, .. }, Bin { op: o2, lhs: l2, rhs: r2, .. }) => {
                o1 == o2 && l1 == l2 && r1 == r2
            }
            (Call { func: f1, arg: a1, .. }, Call { func: f2, arg: a2, .. }) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

impl fmt::Display for FieldExpr {
    /// Fully parenthesized form; parsing it yields an equal tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldExpr::Num(v) => write!(f, "{v:?}"),
            FieldExpr::Var(Var::X1) => f.write_str("x1"),
            FieldExpr::Var(Var::X2) => f.write_str("x2"),
            FieldExpr::Neg(e) => write!(f, "(-{e})"),
            FieldExpr::Bin { op, lhs, rhs, .. } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            FieldExpr::Call { func, arg, .. } => write!(f, "{}({arg})", func.name()),
        }
    }
}

impl FieldExpr {
    pub fn parse(src: &str) -> Result<FieldExpr, FieldError> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, end: src.len() };
        let e = p.expr(0)?;
        match p.peek() {
            None => Ok(e),
            Some(t) => Err(FieldError::Syntax {
                offset: t.offset,
                message: format!("unexpected {}", t.kind.describe()),
            }),
        }
    }

    pub fn eval(&self, x: Vec2) -> Result<f64, FieldError> {
        let v = match self {
            FieldExpr::Num(v) => *v,
            FieldExpr::Var(Var::X1) => x.x,
            FieldExpr::Var(Var::X2) => x.y,
            FieldExpr::Neg(e) => -e.eval(x)?,
            FieldExpr::Bin { op, lhs, rhs, offset } => {
                let a = lhs.eval(x)?;
                let b = rhs.eval(x)?;
                let v = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(domain(*offset, "division by zero", x));
                        }
                        a / b
                    }
                    BinOp::Pow => pow(a, b),
                };
                if !v.is_finite() {
                    return Err(domain(*offset, "non-finite result", x));
                }
                v
            }
            FieldExpr::Call { func, arg, offset } => {
                let a = arg.eval(x)?;
                let v = match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(domain(*offset, "sqrt of a negative number", x));
                        }
                        a.sqrt()
                    }
                };
                if !v.is_finite() {
                    return Err(domain(*offset, "non-finite result", x));
                }
                v
            }
        };
        Ok(v)
    }
}

/// Integer exponents use repeated multiplication so `x^2` is exact.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn domain(offset: usize, what: &str, x: Vec2) -> FieldError {
    FieldError::Domain {
        offset,
        message: format!("{what} at x = ({}, {})", x.x, x.y),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("number {v}"),
            TokKind::Ident(s) => format!("identifier '{s}'"),
            TokKind::Op(c) => format!("'{c}'"),
            TokKind::LParen => "'('".into(),
            TokKind::RParen => "')'".into(),
            TokKind::Comma => "','".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, FieldError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut k = i + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        i = k;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| FieldError::Syntax {
                    offset: start,
                    message: format!("malformed number '{text}'"),
                })?;
                out.push(Token { kind: TokKind::Num(v), offset: start });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token { kind: TokKind::Ident(src[start..i].to_string()), offset: start });
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => out.push(Token { kind: TokKind::Op(c as char), offset: start }),
            b'(' => out.push(Token { kind: TokKind::LParen, offset: start }),
            b')' => out.push(Token { kind: TokKind::RParen, offset: start }),
            b',' => out.push(Token { kind: TokKind::Comma, offset: start }),
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(FieldError::Syntax {
                    offset: start,
                    message: format!("unexpected character '{ch}'"),
                });
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eof_error(&self, what: &str) -> FieldError {
        FieldError::Syntax {
            offset: self.end,
            message: format!("unexpected end of input, expected {what}"),
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<FieldExpr, FieldError> {
        let mut lhs = self.prefix()?;
        loop {
            let (op, offset) = match self.peek() {
                Some(Token { kind: TokKind::Op(c), offset }) => {
                    let op = match c {
                        '+' => BinOp::Add,
                        '-' => BinOp::Sub,
                        '*' => BinOp::Mul,
                        '/' => BinOp::Div,
                        _ => BinOp::Pow,
                    };
                    (op, *offset)
                }
                _ => break,
            };
            let (lbp, rbp) = op.binding();
            if lbp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(rbp)?;
            lhs = FieldExpr::Bin { op, lhs: Box::new(lhs), rhs: Box::new(rhs), offset };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<FieldExpr, FieldError> {
        let tok = self.next().ok_or_else(|| self.eof_error("an operand"))?;
        match tok.kind {
            TokKind::Num(v) => Ok(FieldExpr::Num(v)),
            TokKind::Op('-') => Ok(FieldExpr::Neg(Box::new(self.expr(PREFIX_NEG_BP)?))),
            TokKind::Op('+') => self.expr(PREFIX_NEG_BP),
            TokKind::LParen => {
                let e = self.expr(0)?;
                self.expect_rparen()?;
                Ok(e)
            }
            TokKind::Ident(name) => match name.as_str() {
                "x1" => Ok(FieldExpr::Var(Var::X1)),
                "x2" => Ok(FieldExpr::Var(Var::X2)),
                _ => {
                    let func = Func::from_name(&name).ok_or(FieldError::UnknownIdentifier {
                        name: name.clone(),
                        offset: tok.offset,
                    })?;
                    self.call(func, tok.offset)
                }
            },
            other => Err(FieldError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn call(&mut self, func: Func, offset: usize) -> Result<FieldExpr, FieldError> {
        match self.next() {
            Some(Token { kind: TokKind::LParen, .. }) => {}
            Some(t) => {
                return Err(FieldError::Syntax {
                    offset: t.offset,
                    message: format!("expected '(' after {}", func.name()),
                })
            }
            None => return Err(self.eof_error("'('")),
        }
        let mut args = vec![self.expr(0)?];
        while let Some(Token { kind: TokKind::Comma, .. }) = self.peek() {
            self.pos += 1;
            args.push(self.expr(0)?);
        }
        self.expect_rparen()?;
        if args.len() != 1 {
            return Err(FieldError::Arity {
                name: func.name().to_string(),
                expected: 1,
                found: args.len(),
                offset,
            });
        }
        Ok(FieldExpr::Call { func, arg: Box::new(args.pop().unwrap()), offset })
    }

    fn expect_rparen(&mut self) -> Result<(), FieldError> {
        match self.next() {
            Some(Token { kind: TokKind::RParen, .. }) => Ok(()),
            Some(t) => Err(FieldError::Syntax {
                offset: t.offset,
                message: format!("expected ')', found {}", t.kind.describe()),
            }),
            None => Err(self.eof_error("')'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(s: &str, x1: f64, x2: f64) -> f64 {
        FieldExpr::parse(s).unwrap().eval(Vec2::new(x1, x2)).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("-2*x1^2", 3.0, 0.0), -18.0);
        assert_eq!(ev("-x1^2", 3.0, 0.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(ev("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(ev("(1 + 2) * 3", 0.0, 0.0), 9.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("x1 * -x2", 2.0, 3.0), -6.0);
        assert_eq!(ev("1.5e1 + 2E-1", 0.0, 0.0), 15.2);
    }

    #[test]
    fn functions() {
        assert_eq!(ev("sin(x1)", 0.0, 5.0), 0.0);
        assert_eq!(ev("sqrt(abs(x2))", 0.0, -16.0), 4.0);
        assert_eq!(ev("exp(0) + cos(0)", 0.0, 0.0), 2.0);
    }

    #[test]
    fn syntax_error_offsets() {
        match FieldExpr::parse("x1 +") {
            Err(FieldError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match FieldExpr::parse("(x1 * 2") {
            Err(FieldError::Syntax { offset, .. }) => assert_eq!(offset, 7),
            other => panic!("{other:?}"),
        }
        match FieldExpr::parse("x1 $ 2") {
            Err(FieldError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("{other:?}"),
        }
        match FieldExpr::parse("x1 x2") {
            Err(FieldError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_and_arity() {
        assert!(matches!(
            FieldExpr::parse("2*y + 1"),
            Err(FieldError::UnknownIdentifier { ref name, offset: 2 }) if name == "y"
        ));
        assert!(matches!(
            FieldExpr::parse("sin(x1, x2)"),
            Err(FieldError::Arity { expected: 1, found: 2, offset: 0, .. })
        ));
    }

    #[test]
    fn domain_errors_carry_location() {
        let e = FieldExpr::parse("1 + sqrt(x1)").unwrap();
        match e.eval(Vec2::new(-1.0, 0.0)) {
            Err(FieldError::Domain { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        let e = FieldExpr::parse("x2 / x1").unwrap();
        assert!(matches!(e.eval(Vec2::new(0.0, 1.0)), Err(FieldError::Domain { offset: 3, .. })));
    }

    #[test]
    fn print_parse_round_trip() {
        for src in ["-2*x1 - 10*x2", "x2 + x1*(1 - x1^2 - x2^2)", "-x1^2^-x2", "sqrt(abs(x1)) / 3.25e-7"] {
            let e = FieldExpr::parse(src).unwrap();
            let again = FieldExpr::parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }

    fn arb_expr() -> impl Strategy<Value = FieldExpr> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(FieldExpr::Num),
            Just(FieldExpr::Var(Var::X1)),
            Just(FieldExpr::Var(Var::X2)),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| FieldExpr::Neg(Box::new(e))),
                (inner.clone(), inner.clone(), 0usize..5).prop_map(|(l, r, k)| FieldExpr::Bin {
                    op: [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][k],
                    lhs: Box::new(l),
                    rhs: Box::new(r),
                    offset: 0,
                }),
                (inner, 0usize..5).prop_map(|(a, k)| FieldExpr::Call {
                    func: [Func::Sin, Func::Cos, Func::Exp, Func::Sqrt, Func::Abs][k],
                    arg: Box::new(a),
                    offset: 0,
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn printed_trees_reparse_identically(e in arb_expr()) {
            let again = FieldExpr::parse(&e.to_string()).unwrap();
            prop_assert_eq!(e, again);
        }

        #[test]
        fn polynomial_matches_hand_evaluation(x1 in -3.0f64..3.0, x2 in -3.0f64..3.0) {
            let got = ev("-2*x1^2 + 3*x1*x2 - x2^3/4", x1, x2);
            let want = -2.0 * (x1 * x1) + 3.0 * x1 * x2 - (x2 * x2 * x2) / 4.0;
            prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }
}
