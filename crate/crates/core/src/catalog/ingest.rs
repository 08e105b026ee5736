//! CSV loading: `instrument_id,class,attribute,timestamp,value`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{merge_into, register, schema, AttributeKind, Catalog, CatalogError, Instrument, Result};
use crate::value::{ObservationSeries, Timestamp};

pub const CSV_HEADER: [&str; 5] = ["instrument_id", "class", "attribute", "timestamp", "value"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IngestReport {
    pub instruments_created: usize,
    pub points_written: usize,
    pub rows_rejected: Vec<RejectedRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

struct Row {
    instrument: String,
    class: String,
    attribute: String,
    timestamp: Timestamp,
    value: f64,
}

fn parse_row(record: &csv::StringRecord) -> std::result::Result<Row, String> {
    if record.len() != CSV_HEADER.len() {
        return Err(format!("expected {} fields, found {}", CSV_HEADER.len(), record.len()));
    }
    let instrument = record[0].to_string();
    schema::check_path_name("instrument id", &instrument)?;
    let timestamp = Timestamp::parse_iso(&record[3]).map_err(|e| e.to_string())?;
    let value: f64 = record[4].trim().parse().map_err(|_| format!("invalid value {:?}", &record[4]))?;
    if !value.is_finite() {
        return Err(format!("value {:?} is not finite", &record[4]));
    }
    Ok(Row { instrument, class: record[1].to_string(), attribute: record[2].to_string(), timestamp, value })
}

impl Catalog {
    /// Loads observations from CSV. Unknown instruments are created in the
    /// named class; the class and a stored-series attribute must already
    /// exist. Bad rows are reported and skipped, good rows are written. A
    /// repeated timestamp keeps the first row.
    pub fn ingest_csv(&self, input: impl Read) -> Result<IngestReport> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
        let header = match reader.headers() {
            Ok(h) => h.clone(),
            Err(e) => return Err(csv_error(e)),
        };
        let header: Vec<&str> = header.iter().collect();
        let first = header.first().map(|h| h.trim_start_matches('\u{feff}'));
        if header.len() != CSV_HEADER.len() || first != Some(CSV_HEADER[0]) || header[1..] != CSV_HEADER[1..] {
            return Err(CatalogError::Csv(format!("missing header; expected {}", CSV_HEADER.join(","))));
        }

        let mut rows = Vec::new();
        let mut report = IngestReport::default();
        for record in reader.records() {
            match record {
                Ok(r) => {
                    let line = r.position().map_or(0, |p| p.line());
                    match parse_row(&r) {
                        Ok(row) => rows.push((line, row)),
                        Err(reason) => report.rows_rejected.push(RejectedRow { line, reason }),
                    }
                }
                Err(e) if e.is_io_error() => return Err(csv_error(e)),
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line());
                    report.rows_rejected.push(RejectedRow { line, reason: e.to_string() });
                }
            }
        }

        self.mutate(|state, pending| {
            // (instrument, attribute) → timestamp → (line, value)
            let mut groups: BTreeMap<(String, String), BTreeMap<Timestamp, (u64, f64)>> = BTreeMap::new();
            let mut created = BTreeSet::new();
            for (line, row) in rows {
                let reject = |reason: String| RejectedRow { line, reason };
                let Some(class) = state.classes.get(&row.class) else {
                    report.rows_rejected.push(reject(format!("unknown class '{}'", row.class)));
                    continue;
                };
                let attr = match class.attribute(&row.attribute) {
                    Some(a) if a.kind == AttributeKind::StoredSeries => a.name.clone(),
                    Some(a) => {
                        report.rows_rejected.push(reject(format!("attribute '{}' is {}, not stored-series", a.name, a.kind)));
                        continue;
                    }
                    None => {
                        report.rows_rejected.push(reject(format!("unknown attribute '{}' on class '{}'", row.attribute, row.class)));
                        continue;
                    }
                };
                match state.instruments.get(&row.instrument) {
                    Some(inst) if inst.class != row.class => {
                        report.rows_rejected.push(reject(format!(
                            "instrument '{}' belongs to class '{}'",
                            inst.id, inst.class
                        )));
                        continue;
                    }
                    Some(_) => {}
                    None => {
                        register(state, Instrument::new(&row.instrument, &row.class, &row.instrument))?;
                        created.insert(row.instrument.clone());
                    }
                }
                let stored = state.series.get(&super::key(&row.instrument, &attr));
                if stored.is_some_and(|s| s.get(row.timestamp).is_some()) {
                    report.rows_rejected.push(reject(format!("timestamp {} already stored", row.timestamp)));
                    continue;
                }
                let group = groups.entry((row.instrument, attr)).or_default();
                if let Some((first, _)) = group.get(&row.timestamp) {
                    report.rows_rejected.push(reject(format!(
                        "duplicate timestamp {} (first seen on line {first})",
                        row.timestamp
                    )));
                    continue;
                }
                group.insert(row.timestamp, (line, row.value));
            }

            for ((instrument, attr), points) in groups {
                let incoming = ObservationSeries::new(points.into_iter().map(|(t, (_, v))| (t, v)))
                    .expect("BTreeMap keys are ordered and values finite");
                report.points_written += incoming.len();
                merge_into(state, pending, &instrument, &attr, &incoming)?;
            }
            report.instruments_created = created.len();
            pending.catalog |= !created.is_empty();
            report.rows_rejected.sort_by_key(|r| r.line);
            Ok(report)
        })
    }
}

fn csv_error(e: csv::Error) -> CatalogError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CatalogError::Io(io),
            _ => unreachable!(),
        }
    } else {
        CatalogError::Csv(e.to_string())
    }
}
