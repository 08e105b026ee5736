use std::fmt;
use std::str::FromStr;

use super::{align, AlignmentPolicy, CellError, ErrorCode, Matrix, ObservationSeries, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }

    #[inline]
    pub fn apply(self, x: f64, y: f64) -> f64 {
        match self {
            BinaryOp::Add => x + y,
            BinaryOp::Sub => x - y,
            BinaryOp::Mul => x * y,
            BinaryOp::Div => x / y,
        }
    }

    fn overflow_error(self) -> Value {
        match self {
            BinaryOp::Div => Value::error(ErrorCode::DivZero, "division produced a non-finite result"),
            _ => Value::error(ErrorCode::Num, format!("'{}' produced a non-finite result", self.symbol())),
        }
    }
}

/// The aggregate function table. Every entry is unary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregate {
    Sum,
    Count,
    Min,
    Max,
    Average,
    First,
    Last,
}

impl Aggregate {
    pub const ALL: [Aggregate; 7] = [
        Aggregate::Sum,
        Aggregate::Count,
        Aggregate::Min,
        Aggregate::Max,
        Aggregate::Average,
        Aggregate::First,
        Aggregate::Last,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Aggregate::Sum => "SUM",
            Aggregate::Count => "COUNT",
            Aggregate::Min => "MIN",
            Aggregate::Max => "MAX",
            Aggregate::Average => "AVERAGE",
            Aggregate::First => "FIRST",
            Aggregate::Last => "LAST",
        }
    }

    pub fn arity(self) -> usize {
        1
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aggregate {
    type Err = ();

    /// Case-insensitive.
    fn from_str(s: &str) -> Result<Self, ()> {
        Aggregate::ALL.into_iter().find(|a| a.name().eq_ignore_ascii_case(s)).ok_or(())
    }
}

fn type_error(op: impl fmt::Display, v: &Value) -> Value {
    Value::error(ErrorCode::Type, format!("{op} is not defined for {} operands", v.kind()))
}

fn checked_series(s: ObservationSeries, op: BinaryOp) -> Value {
    if s.has_non_finite() {
        op.overflow_error()
    } else {
        Value::Series(s)
    }
}

/// Arithmetic between scalars and series. Series operands are aligned with
/// `policy` first; a scalar applies at every point of a series.
pub fn elementwise(op: BinaryOp, a: &Value, b: &Value, policy: AlignmentPolicy) -> Value {
    if let Value::Err(_) = a {
        return a.clone();
    }
    if let Value::Err(_) = b {
        return b.clone();
    }
    match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => {
            let r = op.apply(*x, *y);
            if r.is_finite() {
                Value::Scalar(r)
            } else {
                op.overflow_error()
            }
        }
        (Value::Series(s), Value::Scalar(y)) => checked_series(s.map_values(|x| op.apply(x, *y)), op),
        (Value::Scalar(x), Value::Series(s)) => checked_series(s.map_values(|y| op.apply(*x, y)), op),
        // Shared timestamps align to themselves under every policy.
        (Value::Series(l), Value::Series(r)) if l.times() == r.times() => {
            let values = l.values().iter().zip(r.values()).map(|(&x, &y)| op.apply(x, y)).collect();
            checked_series(ObservationSeries::from_columns_unchecked(l.times().to_vec(), values), op)
        }
        (Value::Series(l), Value::Series(r)) => match align(l, r, policy) {
            Ok((l, r)) => {
                let values = l.values().iter().zip(r.values()).map(|(&x, &y)| op.apply(x, y)).collect();
                checked_series(ObservationSeries::from_columns_unchecked(l.times().to_vec(), values), op)
            }
            Err(e) => Value::Err(e),
        },
        (Value::Scalar(_) | Value::Series(_), other) | (other, _) => type_error(op.symbol(), other),
    }
}

pub fn negate(v: &Value) -> Value {
    match v {
        Value::Scalar(x) => Value::Scalar(-x),
        Value::Series(s) => Value::Series(s.map_values(|x| -x)),
        Value::Err(_) => v.clone(),
        other => type_error("negation", other),
    }
}

/// Collapses a series to a scalar. A scalar counts as a single observation.
pub fn aggregate(func: Aggregate, v: &Value) -> Value {
    let values: &[f64] = match v {
        Value::Series(s) => s.values(),
        Value::Scalar(x) => std::slice::from_ref(x),
        Value::Err(_) => return v.clone(),
        other => return type_error(func, other),
    };
    let empty = || Value::Err(CellError::new(ErrorCode::Num, format!("{func} of an empty series")));
    match func {
        // Ascending timestamp order, left to right.
        Aggregate::Sum => Value::number(values.iter().fold(0.0, |acc, &x| acc + x)),
        Aggregate::Count => Value::Scalar(values.len() as f64),
        Aggregate::Min => values.iter().copied().reduce(f64::min).map_or_else(empty, Value::Scalar),
        Aggregate::Max => values.iter().copied().reduce(f64::max).map_or_else(empty, Value::Scalar),
        Aggregate::Average => {
            if values.is_empty() {
                empty()
            } else {
                Value::number(values.iter().fold(0.0, |acc, &x| acc + x) / values.len() as f64)
            }
        }
        Aggregate::First => values.first().copied().map_or_else(empty, Value::Scalar),
        Aggregate::Last => values.last().copied().map_or_else(empty, Value::Scalar),
    }
}

/// Two-column (timestamp micros, value) expansion of a series.
pub fn unfold(s: &ObservationSeries) -> Matrix {
    let data = s.iter().flat_map(|(t, v)| [t.micros() as f64, v]).collect();
    Matrix::new(s.len(), 2, data).expect("2 columns per point")
}
