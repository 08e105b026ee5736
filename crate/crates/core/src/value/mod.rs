//! Cell values.
//!
//! A cell holds a scalar, a whole time series, a matrix, text, or an error.
//! Arithmetic between series aligns them on timestamps first (see
//! [`AlignmentPolicy`]); aggregates collapse a series to a scalar.
//!
//! Non-finite numbers never live inside a [`Value`]. Any operation that would
//! produce NaN or an infinity returns an [`ErrorCode`] instead.

mod align;
mod ops;
mod series;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use align::{align, AlignmentPolicy};
pub use ops::{aggregate, elementwise, negate, unfold, Aggregate, BinaryOp};
pub use series::{ObservationSeries, SeriesError, Timestamp, TimestampParseError};

/// The closed set of cell error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorCode {
    DivZero,
    Align,
    Cycle,
    Ref,
    Parse,
    Type,
    Num,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 7] = [
        ErrorCode::DivZero,
        ErrorCode::Align,
        ErrorCode::Cycle,
        ErrorCode::Ref,
        ErrorCode::Parse,
        ErrorCode::Type,
        ErrorCode::Num,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::DivZero => "#DIV/0",
            ErrorCode::Align => "#ALIGN",
            ErrorCode::Cycle => "#CYCLE",
            ErrorCode::Ref => "#REF",
            ErrorCode::Parse => "#PARSE",
            ErrorCode::Type => "#TYPE",
            ErrorCode::Num => "#NUM",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorCode::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown error code {s:?}"))
    }
}

impl Serialize for ErrorCode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ErrorCode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellError {
    pub code: ErrorCode,
    pub message: String,
}

impl CellError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        CellError { code, message: message.into() }
    }
}

impl fmt::Display for CellError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.code, self.message)
    }
}

/// Row-major dense matrix. Only produced by [`unfold`].
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        (rows.checked_mul(cols) == Some(data.len())).then_some(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        (row < self.rows && col < self.cols).then(|| self.data[row * self.cols + col])
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Series(ObservationSeries),
    Matrix(Matrix),
    Text(String),
    Err(CellError),
}

impl Value {
    /// A scalar, or `#NUM` if `x` is not finite.
    pub fn number(x: f64) -> Value {
        if x.is_finite() {
            Value::Scalar(x)
        } else {
            Value::error(ErrorCode::Num, "result is not a finite number")
        }
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Value {
        Value::Err(CellError::new(code, message))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "scalar",
            Value::Series(_) => "series",
            Value::Matrix(_) => "matrix",
            Value::Text(_) => "text",
            Value::Err(_) => "error",
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Value::Scalar(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_series(&self) -> Option<&ObservationSeries> {
        match self {
            Value::Series(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_error(&self) -> Option<&CellError> {
        match self {
            Value::Err(e) => Some(e),
            _ => None,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Value::Err(_))
    }

    /// Structural equality that compares floats by bit pattern.
    pub fn bit_eq(&self, other: &Value) -> bool {
        fn bits_eq(a: &[f64], b: &[f64]) -> bool {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        }
        match (self, other) {
            (Value::Scalar(a), Value::Scalar(b)) => a.to_bits() == b.to_bits(),
            (Value::Series(a), Value::Series(b)) => a.times() == b.times() && bits_eq(a.values(), b.values()),
            (Value::Matrix(a), Value::Matrix(b)) => {
                a.rows() == b.rows() && a.cols() == b.cols() && bits_eq(a.data(), b.data())
            }
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Err(a), Value::Err(b)) => a == b,
            _ => false,
        }
    }
}

impl From<ObservationSeries> for Value {
    fn from(s: ObservationSeries) -> Self {
        Value::Series(s)
    }
}

impl From<CellError> for Value {
    fn from(e: CellError) -> Self {
        Value::Err(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_codes_round_trip_through_text() {
        for code in ErrorCode::ALL {
            assert_eq!(code.as_str().parse::<ErrorCode>(), Ok(code));
        }
        assert!("#NOPE".parse::<ErrorCode>().is_err());
    }

    #[test]
    fn number_rejects_non_finite() {
        assert_eq!(Value::number(1.5), Value::Scalar(1.5));
        assert_eq!(Value::number(f64::NAN).as_error().unwrap().code, ErrorCode::Num);
        assert_eq!(Value::number(f64::NEG_INFINITY).as_error().unwrap().code, ErrorCode::Num);
    }

    #[test]
    fn matrix_shape_checked() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_none());
        let m = Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.get(1, 0), Some(3.0));
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert_eq!(m.get(2, 0), None);
    }

    #[test]
    fn bit_eq_distinguishes_signed_zero() {
        assert!(!Value::Scalar(0.0).bit_eq(&Value::Scalar(-0.0)));
        assert!(Value::Scalar(0.0).bit_eq(&Value::Scalar(0.0)));
    }
}
