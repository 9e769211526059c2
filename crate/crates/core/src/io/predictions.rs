//! Frame-prediction CSV.
//!
//! ```text
//! # frame_rate=50
//! # direction=forward
//! # classes=zf,other
//! frame,p_det,dur_reg,logit_zf,logit_other
//! 0,0.0100000000,0.0000000000,0.0000000000,0.0000000000
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{parse_f64, read_text, write_text};
use crate::error::{Error, Result};
use crate::types::{ClassVocab, Direction, FramePredictions};

pub fn render_predictions(preds: &FramePredictions, vocab: &ClassVocab) -> Result<String> {
    if vocab.len() != preds.num_classes() {
        return Err(Error::Config(format!(
            "{} class names for {} logit columns",
            vocab.len(),
            preds.num_classes()
        )));
    }
    if let Some(bad) = vocab.names().iter().find(|n| n.contains(',')) {
        return Err(Error::Config(format!("class name {bad:?} contains a comma")));
    }
    let mut out = String::new();
    let _ = writeln!(out, "# frame_rate={}", preds.frame_rate());
    let _ = writeln!(out, "# direction={}", preds.direction().as_str());
    let _ = writeln!(out, "# classes={}", vocab.names().join(","));
    out.push_str("frame,p_det,dur_reg");
    for name in vocab.names() {
        let _ = write!(out, ",logit_{name}");
    }
    out.push('\n');
    for t in 0..preds.num_frames() {
        let _ = write!(out, "{t},{:.10},{:.10}", preds.p_det()[t], preds.dur_reg()[t]);
        for v in preds.logits_at(t) {
            let _ = write!(out, ",{v:.10}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_predictions(preds: &FramePredictions, vocab: &ClassVocab, path: &Path) -> Result<()> {
    write_text(path, &render_predictions(preds, vocab)?)
}

fn parse_predictions(path: &Path, text: &str, expected: Option<&ClassVocab>) -> Result<(FramePredictions, ClassVocab)> {
    let mut frame_rate = None;
    let mut direction = None;
    let mut classes = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let Some((k, v)) = line.strip_prefix('#').and_then(|m| m.split_once('=')) else {
            continue;
        };
        match k.trim() {
            "frame_rate" => frame_rate = Some(parse_f64(path, line_no, "frame_rate", v)?),
            "direction" => {
                direction = Some(v.trim().parse::<Direction>().map_err(|e| Error::parse(path, line_no, e.to_string()))?)
            }
            "classes" => {
                let names: Vec<&str> = v.split(',').map(str::trim).collect();
                let vocab = ClassVocab::new(names).map_err(|e| Error::parse(path, line_no, e.to_string()))?;
                if let Some(exp) = expected {
                    if &vocab != exp {
                        return Err(Error::parse(
                            path,
                            line_no,
                            format!("classes {:?} differ from expected {:?}", vocab.names(), exp.names()),
                        ));
                    }
                }
                classes = Some(vocab);
            }
            _ => {}
        }
    }
    let frame_rate = frame_rate.ok_or_else(|| Error::parse(path, 1, "missing '# frame_rate=' header"))?;
    let direction = direction.unwrap_or(Direction::Forward);
    let vocab = classes.ok_or_else(|| Error::parse(path, 1, "missing '# classes=' header"))?;
    let width = 3 + vocab.len();

    let mut p_det = Vec::new();
    let mut dur_reg = Vec::new();
    let mut logits = Vec::new();
    let mut reader = super::csv_reader(b',', text);
    reader.set_headers(csv::StringRecord::new());
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| super::csv_error(path, e))?;
        let line_no = super::record_line(&record);
        if record.iter().all(|f| f.trim().is_empty()) || record[0].starts_with('#') {
            continue;
        }
        if record.len() != width {
            return Err(Error::parse(path, line_no, format!("expected {width} columns, found {}", record.len())));
        }
        // The column header row is optional.
        if std::mem::take(&mut first) && record[0].trim() == "frame" {
            continue;
        }
        let frame: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad frame index {:?}", &record[0])))?;
        if frame != p_det.len() {
            return Err(Error::parse(
                path,
                line_no,
                format!("frame index {frame} is not contiguous (expected {})", p_det.len()),
            ));
        }
        let p = parse_f64(path, line_no, "p_det", &record[1])?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::parse(path, line_no, format!("p_det {p} outside [0, 1]")));
        }
        let d = parse_f64(path, line_no, "dur_reg", &record[2])?;
        if d < 0.0 {
            return Err(Error::parse(path, line_no, format!("dur_reg {d} is negative")));
        }
        p_det.push(p);
        dur_reg.push(d);
        for f in record.iter().skip(3) {
            logits.push(parse_f64(path, line_no, "logit", f)?);
        }
    }
    let preds = FramePredictions::new(frame_rate, p_det, dur_reg, logits, vocab.len(), direction)
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    Ok((preds, vocab))
}

/// Reads a prediction file, checking its class list against `expected`
/// when one is given.
pub fn read_predictions(path: &Path, expected: Option<&ClassVocab>) -> Result<(FramePredictions, ClassVocab)> {
    parse_predictions(path, &read_text(path)?, expected)
}
