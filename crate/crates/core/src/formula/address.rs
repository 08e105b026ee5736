use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Highest column: "ZZ" in bijective base 26.
pub const MAX_COLUMN: u32 = 26 + 26 * 26;

/// A cell coordinate such as `A1` or `AB12`. Columns run A..Z then AA..ZZ;
/// rows start at 1.
///
/// Ordering is row-major: all of row 1 before row 2, and left to right
/// within a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellAddress {
    row: u32,
    column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid cell address {0:?}")]
pub struct AddressError(pub String);

impl CellAddress {
    /// `column` and `row` are 1-based.
    pub fn new(column: u32, row: u32) -> Option<Self> {
        ((1..=MAX_COLUMN).contains(&column) && row >= 1).then_some(CellAddress { row, column })
    }

    pub fn column(self) -> u32 {
        self.column
    }

    pub fn row(self) -> u32 {
        self.row
    }

    pub fn column_name(self) -> String {
        let mut n = self.column;
        let mut letters = Vec::with_capacity(2);
        while n > 0 {
            let rem = (n - 1) % 26;
            letters.push(b'A' + rem as u8);
            n = (n - 1) / 26;
        }
        letters.reverse();
        String::from_utf8(letters).expect("ascii")
    }

    /// Parses letters-then-digits, case-insensitively. Returns `None` for
    /// anything that is not a well-formed address.
    pub fn parse_ascii(text: &str) -> Option<Self> {
        let split = text.find(|c: char| !c.is_ascii_alphabetic())?;
        let (letters, digits) = text.split_at(split);
        if letters.is_empty() || letters.len() > 2 || digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let column = letters
            .bytes()
            .fold(0u32, |acc, b| acc * 26 + u32::from(b.to_ascii_uppercase() - b'A') + 1);
        let row: u32 = digits.parse().ok()?;
        CellAddress::new(column, row)
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.column_name(), self.row)
    }
}

impl FromStr for CellAddress {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CellAddress::parse_ascii(s).ok_or_else(|| AddressError(s.to_string()))
    }
}

impl Serialize for CellAddress {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CellAddress {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_names() {
        let cases = [(1, "A"), (26, "Z"), (27, "AA"), (28, "AB"), (52, "AZ"), (53, "BA"), (702, "ZZ")];
        for (n, name) in cases {
            let a = CellAddress::new(n, 1).unwrap();
            assert_eq!(a.column_name(), name);
            assert_eq!(CellAddress::parse_ascii(&format!("{name}1")), Some(a));
        }
        assert!(CellAddress::new(703, 1).is_none());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("a1".parse::<CellAddress>().unwrap().to_string(), "A1");
        assert_eq!("B12".parse::<CellAddress>().unwrap(), CellAddress::new(2, 12).unwrap());
        for bad in ["", "A", "1", "A0", "AAA1", "A1B", "A-1", "A 1", "A99999999999"] {
            assert!(bad.parse::<CellAddress>().is_err(), "{bad}");
        }
    }

    #[test]
    fn row_major_order() {
        let mut v: Vec<CellAddress> = ["B1", "A2", "A1", "AA1"].iter().map(|s| s.parse().unwrap()).collect();
        v.sort();
        let names: Vec<_> = v.iter().map(ToString::to_string).collect();
        assert_eq!(names, ["A1", "B1", "AA1", "A2"]);
    }
}
