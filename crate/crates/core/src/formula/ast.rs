use std::collections::BTreeSet;
use std::fmt;

use super::CellAddress;
use crate::value::{Aggregate, BinaryOp};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Always finite and non-negative when produced by the parser.
    Number(f64),
    Cell(CellAddress),
    /// `[Name]`, case preserved. Resolution is case-insensitive.
    Attr(String),
    Binary { op: BinaryOp, left: Box<Expr>, right: Box<Expr> },
    Neg(Box<Expr>),
    Call { func: Aggregate, args: Vec<Expr> },
}

impl Expr {
    pub fn binary(op: BinaryOp, left: Expr, right: Expr) -> Expr {
        Expr::Binary { op, left: Box::new(left), right: Box::new(right) }
    }

    pub fn call(func: Aggregate, args: Vec<Expr>) -> Expr {
        Expr::Call { func, args }
    }

    /// Canonical formula text, `=` prefix included.
    pub fn to_formula(&self) -> String {
        format!("={self}")
    }

    pub fn dependencies(&self) -> Dependencies {
        let mut deps = Dependencies::default();
        self.collect(&mut deps);
        deps
    }

    fn collect(&self, deps: &mut Dependencies) {
        match self {
            Expr::Number(_) => {}
            Expr::Cell(a) => {
                deps.cells.insert(*a);
            }
            Expr::Attr(name) => {
                deps.attributes.insert(name.clone());
            }
            Expr::Binary { left, right, .. } => {
                left.collect(deps);
                right.collect(deps);
            }
            Expr::Neg(inner) => inner.collect(deps),
            Expr::Call { args, .. } => args.iter().for_each(|a| a.collect(deps)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op: BinaryOp::Add | BinaryOp::Sub, .. } => 1,
            Expr::Binary { .. } => 2,
            _ => 3,
        }
    }
}

fn op_precedence(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Add | BinaryOp::Sub => 1,
        BinaryOp::Mul | BinaryOp::Div => 2,
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    let mag = x.abs();
    if mag == 0.0 || (1e-5..1e16).contains(&mag) {
        write!(f, "{x}")
    } else {
        write!(f, "{x:e}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

/// Formula body without the leading `=`: no whitespace, the fewest
/// parentheses that reproduce the same tree under left-associative parsing.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(x) => write_number(f, *x),
            Expr::Cell(a) => write!(f, "{a}"),
            Expr::Attr(name) => write!(f, "[{name}]"),
            Expr::Binary { op, left, right } => {
                let p = op_precedence(*op);
                write_child(f, left, left.precedence() < p)?;
                write!(f, "{}", op.symbol())?;
                write_child(f, right, right.precedence() <= p)
            }
            Expr::Neg(inner) => {
                f.write_str("-")?;
                write_child(f, inner, inner.precedence() < 3)
            }
            Expr::Call { func, args } => {
                write!(f, "{func}(")?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Cell and attribute references appearing anywhere in a formula.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dependencies {
    pub cells: BTreeSet<CellAddress>,
    pub attributes: BTreeSet<String>,
}
