//! JSON documents shared by the HTTP service and the command line.

use serde::{Deserialize, Serialize};

use crate::formula::CellAddress;
use crate::grid::{FormulaGrid, GridResult};
use crate::value::{unfold, ErrorCode, Matrix, ObservationSeries, Timestamp, Value};

/// A cell value as JSON. Series timestamps are ISO 8601 UTC strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ValueDoc {
    Scalar { value: f64 },
    Series { points: Vec<(String, f64)> },
    Matrix { rows: usize, cols: usize, data: Vec<f64> },
    Text { value: String },
    Error { code: ErrorCode, message: String },
}

impl From<&Value> for ValueDoc {
    fn from(v: &Value) -> Self {
        match v {
            Value::Scalar(x) => ValueDoc::Scalar { value: *x },
            Value::Series(s) => ValueDoc::Series { points: s.iter().map(|(t, v)| (t.to_iso(), v)).collect() },
            Value::Matrix(m) => ValueDoc::Matrix { rows: m.rows(), cols: m.cols(), data: m.data().to_vec() },
            Value::Text(t) => ValueDoc::Text { value: t.clone() },
            Value::Err(e) => ValueDoc::Error { code: e.code, message: e.message.clone() },
        }
    }
}

impl ValueDoc {
    pub fn to_value(&self) -> Result<Value, String> {
        Ok(match self {
            ValueDoc::Scalar { value } => Value::number(*value),
            ValueDoc::Series { points } => {
                let points = points
                    .iter()
                    .map(|(t, v)| Timestamp::parse_iso(t).map(|t| (t, *v)))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| e.to_string())?;
                Value::Series(ObservationSeries::new(points).map_err(|e| e.to_string())?)
            }
            ValueDoc::Matrix { rows, cols, data } => Value::Matrix(
                Matrix::new(*rows, *cols, data.clone()).ok_or_else(|| "matrix shape mismatch".to_string())?,
            ),
            ValueDoc::Text { value } => Value::Text(value.clone()),
            ValueDoc::Error { code, message } => Value::error(*code, message.clone()),
        })
    }
}

/// Folded view of a cell: a series shows as its length, not its points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FoldedValue {
    Scalar { value: f64 },
    Series { count: usize },
    Matrix { rows: usize, cols: usize },
    Text { value: String },
    Error { code: ErrorCode, message: String },
}

impl From<&Value> for FoldedValue {
    fn from(v: &Value) -> Self {
        match v {
            Value::Scalar(x) => FoldedValue::Scalar { value: *x },
            Value::Series(s) => FoldedValue::Series { count: s.len() },
            Value::Matrix(m) => FoldedValue::Matrix { rows: m.rows(), cols: m.cols() },
            Value::Text(t) => FoldedValue::Text { value: t.clone() },
            Value::Err(e) => FoldedValue::Error { code: e.code, message: e.message.clone() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPreview {
    pub address: CellAddress,
    pub formula: String,
    pub hidden: bool,
    pub value: FoldedValue,
    /// Two-column (timestamp micros, value) matrix, only when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unfolded: Option<ValueDoc>,
}

/// Every cell of an evaluated grid, hidden ones included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreviewPayload {
    pub instrument: String,
    pub attribute: String,
    pub result: CellAddress,
    pub cells: Vec<CellPreview>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PreviewError {
    #[error("cell {0} is not defined in the grid")]
    UnknownCell(CellAddress),
    #[error("cell {0} is not a series (found {1})")]
    NotASeries(CellAddress, &'static str),
}

pub fn build_preview(
    instrument: &str,
    attribute: &str,
    grid: &FormulaGrid,
    result: &GridResult,
    unfold_cell: Option<CellAddress>,
) -> Result<PreviewPayload, PreviewError> {
    if let Some(target) = unfold_cell {
        match result.cell_values.get(&target) {
            None => return Err(PreviewError::UnknownCell(target)),
            Some(Value::Series(_)) => {}
            Some(other) => return Err(PreviewError::NotASeries(target, other.kind())),
        }
    }
    let cells = grid
        .cells
        .iter()
        .map(|(&address, def)| {
            let value = &result.cell_values[&address];
            let unfolded = match (unfold_cell, value) {
                (Some(t), Value::Series(s)) if t == address => Some(ValueDoc::from(&Value::Matrix(unfold(s)))),
                _ => None,
            };
            CellPreview { address, formula: def.formula.clone(), hidden: def.hidden, value: value.into(), unfolded }
        })
        .collect();
    Ok(PreviewPayload { instrument: instrument.into(), attribute: attribute.into(), result: grid.result, cells })
}
