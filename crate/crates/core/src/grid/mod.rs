//! Formula grids: a handful of named cells evaluated together for one
//! instrument.
//!
//! A [`FormulaGrid`] is the stored definition. [`compile`] parses every
//! cell, rejects dangling references and cycles, and fixes an evaluation
//! order. [`evaluate`] runs the compiled grid against an
//! [`EvaluationContext`] that supplies attribute values.

mod compile;
mod eval;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use compile::{compile, CompileError, CompileIssue, CompiledGrid};
pub(crate) use compile::topological_order;
pub use eval::{evaluate, EvaluationContext, GridResult, StaticContext};

use crate::formula::CellAddress;
use crate::value::AlignmentPolicy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDef {
    pub formula: String,
    #[serde(default)]
    pub hidden: bool,
}

impl CellDef {
    pub fn new(formula: impl Into<String>, hidden: bool) -> Self {
        CellDef { formula: formula.into(), hidden }
    }
}

/// Grid definition document.
///
/// Serializes to `{"cells": {"A1": {"formula": "...", "hidden": false}},
/// "result": "A1", "alignment": "intersect"}` with cells in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulaGrid {
    pub cells: BTreeMap<CellAddress, CellDef>,
    pub result: CellAddress,
    #[serde(default)]
    pub alignment: AlignmentPolicy,
}

impl FormulaGrid {
    pub fn new(result: CellAddress) -> Self {
        FormulaGrid { cells: BTreeMap::new(), result, alignment: AlignmentPolicy::default() }
    }

    /// Builder-style cell insertion. Panics on a malformed address, so only
    /// use it with literals.
    pub fn with_cell(mut self, address: &str, formula: &str, hidden: bool) -> Self {
        let address: CellAddress = address.parse().expect("cell address literal");
        self.cells.insert(address, CellDef::new(formula, hidden));
        self
    }

    pub fn with_alignment(mut self, alignment: AlignmentPolicy) -> Self {
        self.alignment = alignment;
        self
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid documents always serialize")
    }

    /// The six-cell volume-weighted average price grid: price and size
    /// attributes in A1/A2, their product in A3, the two sums in A4/A5 and
    /// the ratio in A6. A1..A5 are hidden.
    pub fn vwap() -> Self {
        FormulaGrid::new("A6".parse().unwrap())
            .with_cell("A1", "=[TradePrice]", true)
            .with_cell("A2", "=[TradeSize]", true)
            .with_cell("A3", "=A1*A2", true)
            .with_cell("A4", "=SUM(A3)", true)
            .with_cell("A5", "=SUM(A2)", true)
            .with_cell("A6", "=A4/A5", false)
    }
}
