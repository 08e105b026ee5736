//! Spreadsheet-style analytics over time series, evaluated centrally.
//!
//! A cell in a formula grid can hold an entire time series, so `=A1*A2`
//! multiplies two series point by point after aligning their timestamps.
//! Grids are stored as computed attributes of an instrument class and
//! evaluated on demand for any instrument of that class.
//!
//! - [`value`]: cell values, alignment, arithmetic and aggregates
//! - [`formula`]: the formula language
//! - [`grid`]: compiling and evaluating grids
//! - [`catalog`]: classes, instruments, stored data, CSV ingestion
//! - [`wire`]: JSON documents for values and previews

pub mod catalog;
pub mod formula;
pub mod grid;
pub mod value;
pub mod wire;

pub use catalog::{
    AttributeDef, AttributeKind, Catalog, CatalogError, IngestReport, Instrument, InstrumentClass, ObservationBatch,
    Snapshot,
};
pub use formula::{parse, CellAddress, Expr, ParseError};
pub use grid::{compile, evaluate, CellDef, CompileError, CompiledGrid, EvaluationContext, FormulaGrid, GridResult};
pub use value::{AlignmentPolicy, CellError, ErrorCode, Matrix, ObservationSeries, Timestamp, Value};
pub use wire::{PreviewPayload, ValueDoc};
