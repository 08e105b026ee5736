//! `.fgs` series files.
//!
//! ```text
//! "FGS1"                      4 bytes
//! point count                 u64 little-endian
//! count × (timestamp, value)  i64 LE microseconds, f64 LE
//! ```

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::value::{ObservationSeries, Timestamp};

pub const MAGIC: &[u8; 4] = b"FGS1";
const HEADER_LEN: usize = 12;
const RECORD_LEN: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("file length {actual} does not match header count {count} (expected {expected} bytes)")]
    Length { count: u64, expected: u64, actual: u64 },
    #[error("invalid series contents: {0}")]
    Series(#[from] crate::value::SeriesError),
}

pub fn encode(series: &ObservationSeries) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * series.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(series.len() as u64).to_le_bytes());
    for (t, v) in series.iter() {
        out.extend_from_slice(&t.micros().to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<ObservationSeries, FormatError> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let count = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes"));
    let expected = count.checked_mul(RECORD_LEN as u64).and_then(|n| n.checked_add(HEADER_LEN as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(FormatError::Length { count, expected: expected.unwrap_or(u64::MAX), actual: bytes.len() as u64 });
    }
    let records = bytes[HEADER_LEN..].chunks_exact(RECORD_LEN);
    let mut times = Vec::with_capacity(count as usize);
    let mut values = Vec::with_capacity(count as usize);
    for r in records {
        times.push(Timestamp(i64::from_le_bytes(r[..8].try_into().expect("8 bytes"))));
        values.push(f64::from_le_bytes(r[8..].try_into().expect("8 bytes")));
    }
    Ok(ObservationSeries::from_columns(times, values)?)
}

pub fn read_file(path: &Path) -> io::Result<ObservationSeries> {
    let bytes = fs::read(path)?;
    decode(&bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))
}

/// Writes next to `path` and renames over it.
pub fn write_file(path: &Path, series: &ObservationSeries) -> io::Result<()> {
    write_atomic(path, &encode(series))
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
