//! File formats: Raven-style selection tables, frame-prediction CSV, 16-bit
//! PCM WAV, flat `key=value` config files and overlap tables.

mod config;
mod overlap_table;
mod predictions;
mod selection;
mod wav;

pub use config::{parse_config, read_config};
pub use overlap_table::{read_overlap_table, render_overlap_table, OverlapRow, OverlapTableRow};
pub use predictions::{read_predictions, render_predictions, write_predictions};
pub use selection::{read_selection_table, render_selection_table, write_selection_table, SelectionRow, SelectionTable};
pub use wav::{decode_wav, encode_wav, read_wav, write_wav};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes a file, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    write_bytes(path, contents.as_bytes())
}

pub fn write_bytes(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn parse_f64(path: &Path, line: usize, field: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("{field}: cannot parse {raw:?} as a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("{field}: {raw:?} is not finite")));
    }
    Ok(v)
}

/// Lenient reader: ragged rows allowed, no quoting (Raven tables never quote
/// and annotations may contain stray quote marks).
pub(crate) fn csv_reader(delimiter: u8, text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .quoting(false)
        .from_reader(text.as_bytes())
}

pub(crate) fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

pub(crate) fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    Error::parse(path, line, err.to_string())
}
