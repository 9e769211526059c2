//! Per-recording overlap tables: expected versus observed pairwise overlaps.
//!
//! Input is CSV with columns `file,n,d,B,observed`. The `d` column holds
//! either the density or a `;`-separated list of call durations in seconds.

use std::fmt::Write as _;
use std::path::Path;

use super::{parse_f64, read_text};
use crate::error::{Error, Result};
use crate::stats::{expected_overlaps, paired_t_statistic, OverlapModelInput, PairedT, TDenominator};

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapRow {
    pub file: String,
    pub input: OverlapModelInput,
    pub observed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTableRow {
    pub file: String,
    pub n: usize,
    pub density: f64,
    pub sources: usize,
    pub expected: f64,
    pub observed: f64,
}

/// Parses an overlap table; durations are interpreted against `window`.
pub fn read_overlap_table(path: &Path, window: f64) -> Result<Vec<OverlapRow>> {
    parse_overlap_table(path, &read_text(path)?, window)
}

pub(crate) fn parse_overlap_table(path: &Path, text: &str, window: f64) -> Result<Vec<OverlapRow>> {
    let mut reader = super::csv_reader(b',', text);
    let cols: Vec<String> = match reader.headers() {
        Ok(h) if !h.is_empty() => h.iter().map(|c| c.trim().to_string()).collect(),
        Ok(_) => return Err(Error::parse(path, 1, "missing header")),
        Err(e) => return Err(super::csv_error(path, e)),
    };
    let find = |names: &[&str]| {
        cols.iter()
            .position(|c| names.contains(&c.as_str()))
            .ok_or_else(|| Error::parse(path, 1, format!("missing column {:?}", names[0])))
    };
    let c_file = find(&["file"])?;
    let c_n = find(&["n"])?;
    let c_d = find(&["d", "d_or_durations", "durations"])?;
    let c_b = find(&["B", "b"])?;
    let c_obs = find(&["observed"])?;

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| super::csv_error(path, e))?;
        let line_no = super::record_line(&record);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if record.len() < cols.len() {
            return Err(Error::parse(path, line_no, format!("expected {} fields, found {}", cols.len(), record.len())));
        }
        let field = |col: usize| record[col].trim();
        let int = |col: usize, name: &str| -> Result<usize> {
            field(col)
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("{name}: bad integer {:?}", field(col))))
        };
        let n = int(c_n, "n")?;
        let sources = int(c_b, "B")?;
        let raw_d = field(c_d);
        let input = if raw_d.contains(';') {
            let durations = raw_d
                .split(';')
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse_f64(path, line_no, "duration", s))
                .collect::<Result<Vec<_>>>()?;
            if durations.len() != n {
                return Err(Error::parse(path, line_no, format!("n = {n} but {} durations", durations.len())));
            }
            OverlapModelInput::from_durations(durations, window, sources)
        } else {
            OverlapModelInput::from_density(n, parse_f64(path, line_no, "d", raw_d)?, window, sources)
        }
        .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        rows.push(OverlapRow {
            file: field(c_file).to_string(),
            input,
            observed: parse_f64(path, line_no, "observed", field(c_obs))?,
        });
    }
    Ok(rows)
}

/// Expected overlaps per row plus the paired t statistic over all rows.
pub fn render_overlap_table(rows: &[OverlapRow], convention: TDenominator) -> Result<(Vec<OverlapTableRow>, PairedT, String)> {
    let table = rows
        .iter()
        .map(|r| {
            Ok(OverlapTableRow {
                file: r.file.clone(),
                n: r.input.n(),
                density: r.input.density(),
                sources: r.input.sources(),
                expected: expected_overlaps(&r.input)?,
                observed: r.observed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let expected: Vec<f64> = table.iter().map(|r| r.expected).collect();
    let observed: Vec<f64> = table.iter().map(|r| r.observed).collect();
    let t = paired_t_statistic(&expected, &observed, convention)?;

    let mut out = String::from("file,n,d,B,expected,observed,difference\n");
    for r in &table {
        let _ = writeln!(
            out,
            "{},{},{:.6},{},{:.6},{:.6},{:.6}",
            r.file,
            r.n,
            r.density,
            r.sources,
            r.expected,
            r.observed,
            r.expected - r.observed
        );
    }
    Ok((table, t, out))
}
