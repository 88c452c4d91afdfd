//! A small arithmetic expression language for user-supplied coefficients.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' exponent)?          right associative
//! exponent:= '-' exponent | power
//! atom    := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! There is no implicit multiplication: `2x` is a syntax error.

mod diff;
mod parse;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub use parse::parse;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("domain error: {op} of {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("expression contains non-differentiable `{0}`")]
    NonDifferentiable(&'static str),
}

pub type Result<T> = std::result::Result<T, ExprError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Floor,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Floor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Floor => "floor",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Result<f64> {
        match self {
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Exp => Ok(x.exp()),
            Func::Log if x <= 0.0 => Err(ExprError::Domain { op: "log", value: x }),
            Func::Log => Ok(x.ln()),
            Func::Sqrt if x < 0.0 => Err(ExprError::Domain { op: "sqrt", value: x }),
            Func::Sqrt => Ok(x.sqrt()),
            Func::Abs => Ok(x.abs()),
            Func::Floor => Ok(x.floor()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
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

    fn apply(self, a: f64, b: f64) -> Result<f64> {
        match self {
            BinOp::Add => Ok(a + b),
            BinOp::Sub => Ok(a - b),
            BinOp::Mul => Ok(a * b),
            BinOp::Div if b == 0.0 => Err(ExprError::Domain { op: "division", value: a }),
            BinOp::Div => Ok(a / b),
            BinOp::Pow => {
                if a < 0.0 && b.fract() != 0.0 {
                    Err(ExprError::Domain { op: "non-integer power", value: a })
                } else if a == 0.0 && b < 0.0 {
                    Err(ExprError::Domain { op: "negative power", value: a })
                } else {
                    Ok(a.powf(b))
                }
            }
        }
    }
}

/// Expression tree. Literals are finite and non-negative; negative constants
/// are represented as `Neg(Num)` so that printing and re-parsing is exact.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        debug_assert!(v.is_finite());
        if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
            Expr::Neg(Box::new(Expr::Num(-v)))
        } else {
            Expr::Num(v)
        }
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    /// Evaluates with every free variable resolved by `lookup`.
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(name) => {
                lookup(name).ok_or_else(|| ExprError::UnboundVariable(name.clone()))?
            }
            Expr::Neg(e) => -e.eval_with(lookup)?,
            Expr::Binary(op, a, b) => op.apply(a.eval_with(lookup)?, b.eval_with(lookup)?)?,
            Expr::Call(f, a) => f.apply(a.eval_with(lookup)?)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain { op: "non-finite result", value: v })
        }
    }

    pub fn eval(&self, bindings: &HashMap<String, f64>) -> Result<f64> {
        self.eval_with(&|name| bindings.get(name).copied())
    }

    /// Evaluates an expression in a single variable.
    pub fn eval1(&self, var: &str, value: f64) -> Result<f64> {
        self.eval_with(&|name| (name == var).then_some(value))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Fails unless every free variable is `var`.
    pub fn check_only_var(&self, var: &str) -> Result<()> {
        match self.free_vars().into_iter().find(|v| v != var) {
            Some(other) => Err(ExprError::UnboundVariable(other)),
            None => Ok(()),
        }
    }

    pub fn contains_func(&self, f: Func) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Neg(e) => e.contains_func(f),
            Expr::Call(g, e) => *g == f || e.contains_func(f),
            Expr::Binary(_, a, b) => a.contains_func(f) || b.contains_func(f),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(e) | Expr::Call(_, e) => 1 + e.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Exact symbolic derivative with respect to `var`.
    pub fn differentiate(&self, var: &str) -> Result<Expr> {
        diff::differentiate(self, var)
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Neg(e) => e.as_const().map(|v| -v),
            _ => None,
        }
    }
}

// Printing is fully parenthesized around compound operands, which keeps
// parse(print(e)) structurally equal to e.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(e) => match **e {
                Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => write!(f, "-{e}"),
                _ => write!(f, "-({e})"),
            },
            Expr::Binary(op, a, b) => {
                write_operand(f, a)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, b)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => write!(f, "{e}"),
        _ => write!(f, "({e})"),
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Expr> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, var: &str, x: f64) -> Result<f64> {
        parse(src).unwrap().eval1(var, x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse("2+3*4").unwrap().eval(&HashMap::new()).unwrap(), 14.0);
        assert_eq!(parse("2^3^2").unwrap().eval(&HashMap::new()).unwrap(), 512.0);
        assert_eq!(parse("-2^2").unwrap().eval(&HashMap::new()).unwrap(), -4.0);
        assert_eq!(parse("2^-1").unwrap().eval(&HashMap::new()).unwrap(), 0.5);
        assert_eq!(parse("8/4/2").unwrap().eval(&HashMap::new()).unwrap(), 1.0);
        assert_eq!(parse("1-2-3").unwrap().eval(&HashMap::new()).unwrap(), -4.0);
        assert_eq!(parse(" ( 1 + 2 ) * 3 ").unwrap().eval(&HashMap::new()).unwrap(), 9.0);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ev("exp(0)", "t", 0.0).unwrap(), 1.0);
        let v = ev("log(1/t)", "t", 0.1).unwrap();
        assert!((v - std::f64::consts::LN_10).abs() < 1e-15);
        assert!(matches!(ev("1/t", "t", 0.0), Err(ExprError::Domain { .. })));
        assert!(matches!(ev("log(t)", "t", -1.0), Err(ExprError::Domain { .. })));
        assert!(matches!(ev("sqrt(t)", "t", -1.0), Err(ExprError::Domain { .. })));
        assert!(matches!(ev("t^0.5", "t", -1.0), Err(ExprError::Domain { .. })));
        assert_eq!(ev("t^2", "t", -3.0).unwrap(), 9.0);
        assert!(matches!(ev("exp(t)", "t", 1000.0), Err(ExprError::Domain { .. })));
    }

    #[test]
    fn unbound_variable_is_reported() {
        let e = parse("x + y").unwrap();
        assert_eq!(e.eval1("x", 1.0), Err(ExprError::UnboundVariable("y".into())));
        assert!(e.check_only_var("x").is_err());
        assert!(parse("sin(τ)").unwrap().check_only_var("τ").is_ok());
    }

    #[test]
    fn negative_literals_print_and_reparse() {
        let e = Expr::binary(BinOp::Mul, Expr::num(-2.5), Expr::var("t"));
        let back = parse(&e.to_string()).unwrap();
        assert_eq!(back, e);
        let e = Expr::binary(BinOp::Pow, Expr::var("t"), Expr::num(-1.0));
        assert_eq!(parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn tiny_and_huge_literals_round_trip() {
        for v in [1e-300, 1.5e300, 0.1, 123456.789] {
            let e = Expr::num(v);
            assert_eq!(parse(&e.to_string()).unwrap(), e);
        }
    }
}
