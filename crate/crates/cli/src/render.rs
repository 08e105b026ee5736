//! Plain-text output.

use std::fmt::Write;

use fgrid_core::grid::CompileIssue;
use fgrid_core::wire::FoldedValue;
use fgrid_core::{ErrorCode, PreviewPayload, Timestamp, ValueDoc};

const TIME_WIDTH: usize = 27;

/// Two columns, timestamp and value, with a header row.
pub fn series_table(points: &[(String, f64)]) -> String {
    let mut out = format!("{:<TIME_WIDTH$}  value\n", "timestamp");
    for (t, v) in points {
        writeln!(out, "{t:<TIME_WIDTH$}  {v}").unwrap();
    }
    out
}

pub fn value(doc: &ValueDoc) -> String {
    match doc {
        ValueDoc::Scalar { value } => format!("{value}\n"),
        ValueDoc::Series { points } => series_table(points),
        ValueDoc::Matrix { cols, data, .. } => matrix(*cols, data),
        ValueDoc::Text { value } => format!("{value}\n"),
        ValueDoc::Error { code, message } => format!("{code} {message}\n"),
    }
}

fn matrix(cols: usize, data: &[f64]) -> String {
    let mut out = String::new();
    for row in data.chunks(cols.max(1)) {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(out, "{}", cells.join("  ")).unwrap();
    }
    out
}

fn folded(v: &FoldedValue) -> String {
    match v {
        FoldedValue::Scalar { value } => value.to_string(),
        FoldedValue::Series { count } => format!("series ({count} points)"),
        FoldedValue::Matrix { rows, cols } => format!("matrix ({rows}x{cols})"),
        FoldedValue::Text { value } => format!("{value:?}"),
        FoldedValue::Error { code, message } => format!("{code} {message}"),
    }
}

/// One row per cell: address, hidden marker, formula, folded value. An
/// unfolded cell follows as a timestamp/value table.
pub fn preview(p: &PreviewPayload) -> String {
    let width = p.cells.iter().map(|c| c.formula.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for c in &p.cells {
        let marker = if c.hidden { "hidden" } else if c.address == p.result { "result" } else { "" };
        writeln!(out, "{:<5} {marker:<6}  {:<width$}  {}", c.address.to_string(), c.formula, folded(&c.value)).unwrap();
    }
    for c in &p.cells {
        if let Some(ValueDoc::Matrix { cols: 2, data, .. }) = &c.unfolded {
            // First column carries integral microseconds.
            let points: Vec<(String, f64)> =
                data.chunks(2).map(|r| (Timestamp(r[0] as i64).to_iso(), r[1])).collect();
            writeln!(out, "\n{}:", c.address).unwrap();
            out.push_str(&series_table(&points));
        }
    }
    out
}

/// Cycle members on one line, then every other issue on its own line.
pub fn compile_issues(issues: &[CompileIssue]) -> String {
    let mut cycle: Vec<String> =
        issues.iter().filter(|i| i.code == ErrorCode::Cycle).filter_map(|i| i.address).map(|a| a.to_string()).collect();
    cycle.dedup();
    let mut out = String::new();
    if !cycle.is_empty() {
        writeln!(out, "{}: {}", ErrorCode::Cycle, cycle.join(",")).unwrap();
    }
    for issue in issues.iter().filter(|i| i.code != ErrorCode::Cycle) {
        writeln!(out, "{issue}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_uses_shortest_round_trip() {
        assert_eq!(value(&ValueDoc::Scalar { value: 140.0 / 6.0 }), "23.333333333333332\n");
    }

    #[test]
    fn series_layout() {
        let t = series_table(&[("2008-02-20T09:30:00.000000Z".into(), 10.5)]);
        assert_eq!(t, "timestamp                    value\n2008-02-20T09:30:00.000000Z  10.5\n");
    }

    #[test]
    fn error_value() {
        let e = ValueDoc::Error { code: ErrorCode::DivZero, message: "division by zero".into() };
        assert_eq!(value(&e), "#DIV/0 division by zero\n");
    }

    #[test]
    fn cycle_line() {
        let issue = |a: &str| CompileIssue {
            address: Some(a.parse().unwrap()),
            code: ErrorCode::Cycle,
            message: "cycle".into(),
            position: None,
        };
        assert_eq!(compile_issues(&[issue("A1"), issue("B1")]), "#CYCLE: A1,B1\n");
    }
}
