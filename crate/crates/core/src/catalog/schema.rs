use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::FormulaGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributeKind {
    StoredSeries,
    StoredScalar,
    FormulaGrid,
}

impl AttributeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeKind::StoredSeries => "stored-series",
            AttributeKind::StoredScalar => "stored-scalar",
            AttributeKind::FormulaGrid => "formula-grid",
        }
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    pub kind: AttributeKind,
    /// Present exactly when `kind` is `FormulaGrid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<FormulaGrid>,
}

impl AttributeDef {
    pub fn stored_series(name: &str) -> Self {
        AttributeDef { name: name.to_string(), kind: AttributeKind::StoredSeries, grid: None }
    }

    pub fn stored_scalar(name: &str) -> Self {
        AttributeDef { name: name.to_string(), kind: AttributeKind::StoredScalar, grid: None }
    }

    pub fn formula_grid(name: &str, grid: FormulaGrid) -> Self {
        AttributeDef { name: name.to_string(), kind: AttributeKind::FormulaGrid, grid: Some(grid) }
    }

    pub fn is_named(&self, name: &str) -> bool {
        self.name.eq_ignore_ascii_case(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstrumentClass {
    pub name: String,
    pub attributes: Vec<AttributeDef>,
}

impl InstrumentClass {
    pub fn attribute(&self, name: &str) -> Option<&AttributeDef> {
        self.attributes.iter().find(|a| a.is_named(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Instrument {
    pub id: String,
    pub class: String,
    pub display_name: String,
}

impl Instrument {
    pub fn new(id: &str, class: &str, display_name: &str) -> Self {
        Instrument { id: id.into(), class: class.into(), display_name: display_name.into() }
    }
}

/// Class names and instrument ids become directory names on disk.
pub(crate) fn check_path_name(what: &str, name: &str) -> Result<(), String> {
    let ok = !name.is_empty()
        && name.len() <= 128
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(format!(
            "{what} {name:?} must be 1-128 characters of letters, digits, '_', '-' or '.', not starting with '.'"
        ))
    }
}

/// Attribute names must be usable inside `[...]` in a formula.
pub(crate) fn check_attribute_name(name: &str) -> Result<(), String> {
    let mut chars = name.chars();
    let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && name.len() <= 128;
    if ok {
        Ok(())
    } else {
        Err(format!("attribute name {name:?} must start with a letter or '_' and contain only letters, digits or '_'"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        assert!(check_path_name("class", "Equity").is_ok());
        assert!(check_path_name("instrument", "BOOTS.L").is_ok());
        for bad in ["", ".", "..", ".hidden", "a/b", "a\\b", "a b", "é"] {
            assert!(check_path_name("x", bad).is_err(), "{bad:?}");
        }
        assert!(check_attribute_name("TradePrice").is_ok());
        assert!(check_attribute_name("_x1").is_ok());
        for bad in ["", "1x", "Trade Price", "a-b", "[x]"] {
            assert!(check_attribute_name(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn attribute_json_shape() {
        let a = AttributeDef::stored_series("TradePrice");
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"{"name":"TradePrice","kind":"stored-series"}"#);
        let i = Instrument::new("EQ1", "Equity", "Boots PLC");
        assert_eq!(
            serde_json::to_string(&i).unwrap(),
            r#"{"id":"EQ1","class":"Equity","displayName":"Boots PLC"}"#
        );
    }
}
