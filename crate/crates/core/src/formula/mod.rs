//! The cell formula language: addresses, parsing, canonical formatting and
//! reference extraction.

mod address;
mod ast;
mod parser;

pub use address::{AddressError, CellAddress, MAX_COLUMN};
pub use ast::{Dependencies, Expr};
pub use parser::{parse, ParseError};

/// `parse` followed by canonical formatting.
pub fn normalize(text: &str) -> Result<String, ParseError> {
    parse(text).map(|e| e.to_formula())
}
