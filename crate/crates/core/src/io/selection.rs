//! Tab-separated selection tables in the Raven Pro layout.
//!
//! Required columns are `Begin Time (s)`, `End Time (s)` and `Annotation`.
//! Other Raven columns (View, Channel, frequency bounds) are accepted and
//! ignored. An optional trailing `Score` column carries detection scores.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{parse_f64, read_text, write_text};
use crate::error::{Error, Result};
use crate::types::{ClassVocab, EventBox, EventSet};

const BEGIN: &str = "Begin Time (s)";
const END: &str = "End Time (s)";
const ANNOTATION: &str = "Annotation";
const SCORE: &str = "Score";
const SELECTION: &str = "Selection";

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub selection_id: usize,
    pub begin: f64,
    pub end: f64,
    pub annotation: String,
    pub score: Option<f64>,
    /// 1-based line in the source file.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTable {
    pub path: PathBuf,
    pub rows: Vec<SelectionRow>,
}

impl SelectionTable {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut reader = super::csv_reader(b'\t', text);
        let header: Vec<String> = match reader.headers() {
            Ok(h) if !h.is_empty() => h.iter().map(|c| c.trim().to_string()).collect(),
            Ok(_) => return Err(Error::parse(path, 1, "missing header")),
            Err(e) => return Err(super::csv_error(path, e)),
        };
        let column = |name: &str| header.iter().position(|h| h == name);
        let need = |name: &str| column(name).ok_or_else(|| Error::parse(path, 1, format!("missing column {name:?}")));
        let (begin_col, end_col, ann_col) = (need(BEGIN)?, need(END)?, need(ANNOTATION)?);
        let score_col = column(SCORE);
        let sel_col = column(SELECTION);

        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| super::csv_error(path, e))?;
            let line_no = super::record_line(&record);
            if record.iter().all(|f| f.trim().is_empty()) {
                continue;
            }
            let field = |col: usize, name: &str| {
                record
                    .get(col)
                    .ok_or_else(|| Error::parse(path, line_no, format!("missing field {name:?}")))
            };
            let begin = parse_f64(path, line_no, BEGIN, field(begin_col, BEGIN)?)?;
            let end = parse_f64(path, line_no, END, field(end_col, END)?)?;
            if begin < 0.0 {
                return Err(Error::parse(path, line_no, format!("negative begin time {begin}")));
            }
            if end <= begin {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("end time {end} is not after begin time {begin}"),
                ));
            }
            let annotation = field(ann_col, ANNOTATION)?.trim().to_string();
            if annotation.is_empty() {
                return Err(Error::parse(path, line_no, "empty annotation"));
            }
            let score = match score_col.and_then(|c| record.get(c)) {
                Some(s) if !s.trim().is_empty() => {
                    let v = parse_f64(path, line_no, SCORE, s)?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::parse(path, line_no, format!("score {v} outside [0, 1]")));
                    }
                    Some(v)
                }
                _ => None,
            };
            let selection_id = match sel_col.and_then(|c| record.get(c)) {
                Some(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(path, line_no, format!("bad selection id {s:?}")))?,
                None => rows.len() + 1,
            };
            rows.push(SelectionRow {
                selection_id,
                begin,
                end,
                annotation,
                score,
                line: line_no,
            });
        }
        Ok(Self {
            path: path.to_path_buf(),
            rows,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(path, &read_text(path)?)
    }

    /// Distinct annotations in order of first appearance.
    pub fn class_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.annotation) {
                names.push(r.annotation.clone());
            }
        }
        names
    }

    /// Converts to events against a fixed vocabulary. Without an explicit
    /// clip duration the latest end time is used. Rows without a score get 1.
    pub fn to_event_set(&self, vocab: &ClassVocab, clip_duration: Option<f64>) -> Result<EventSet> {
        let boxes = self
            .rows
            .iter()
            .map(|r| {
                let class = vocab.index_of(&r.annotation).ok_or_else(|| {
                    Error::parse(&self.path, r.line, format!("unknown class {:?}", r.annotation))
                })?;
                EventBox::new(r.begin, r.end - r.begin, class, r.score.unwrap_or(1.0))
                    .map_err(|e| Error::parse(&self.path, r.line, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let clip = clip_duration.unwrap_or_else(|| self.rows.iter().map(|r| r.end).fold(0.0, f64::max));
        EventSet::new(boxes, clip, vocab.clone())
    }
}

/// Reads a table into an [`EventSet`] over `vocab`.
pub fn read_selection_table(path: &Path, vocab: &ClassVocab) -> Result<EventSet> {
    SelectionTable::read(path)?.to_event_set(vocab, None)
}

/// Renders events as a Raven-compatible table with 6-decimal times.
pub fn render_selection_table(events: &EventSet, with_scores: bool) -> String {
    let mut out = String::from("Selection\tView\tChannel\tBegin Time (s)\tEnd Time (s)\tAnnotation");
    if with_scores {
        out.push_str("\tScore");
    }
    out.push('\n');
    for (i, b) in events.boxes().iter().enumerate() {
        let _ = write!(
            out,
            "{}\tSpectrogram 1\t1\t{:.6}\t{:.6}\t{}",
            i + 1,
            b.onset(),
            b.offset(),
            events.vocab().name(b.class_id()).unwrap_or("?")
        );
        if with_scores {
            let _ = write!(out, "\t{:.6}", b.score());
        }
        out.push('\n');
    }
    out
}

pub fn write_selection_table(events: &EventSet, path: &Path, with_scores: bool) -> Result<()> {
    write_text(path, &render_selection_table(events, with_scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SelectionTable> {
        SelectionTable::parse(Path::new("t.txt"), text)
    }

    #[test]
    fn header_only_is_empty() {
        let t = parse("Selection\tBegin Time (s)\tEnd Time (s)\tAnnotation\n").unwrap();
        let set = t.to_event_set(&ClassVocab::single("zf"), None).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn raven_row_maps_to_box() {
        let text = "Selection\tView\tChannel\tBegin Time (s)\tEnd Time (s)\tLow Freq (Hz)\tHigh Freq (Hz)\tAnnotation\n\
                    1\tSpectrogram 1\t1\t1.000000\t1.110000\t500.0\t8000.0\t zf \n";
        let set = parse(text).unwrap().to_event_set(&ClassVocab::single("zf"), None).unwrap();
        let b = set.boxes()[0];
        assert_eq!(b.onset(), 1.0);
        assert!((b.duration() - 0.11).abs() < 1e-12);
        assert_eq!(b.class_id(), 0);
        assert_eq!(b.score(), 1.0);
    }

    #[test]
    fn inverted_row_names_line() {
        let err = parse("Begin Time (s)\tEnd Time (s)\tAnnotation\n1.0\t2.0\tzf\n3.0\t2.5\tzf\n").unwrap_err();
        assert!(err.to_string().starts_with("t.txt:3:"), "{err}");
    }

    #[test]
    fn errors() {
        assert!(parse("Begin Time (s)\tAnnotation\n").unwrap_err().to_string().contains("End Time"));
        assert!(parse("Begin Time (s)\tEnd Time (s)\tAnnotation\nx\t2\tzf\n").is_err());
        let t = parse("Begin Time (s)\tEnd Time (s)\tAnnotation\n1\t2\tcrow\n").unwrap();
        let err = t.to_event_set(&ClassVocab::single("zf"), None).unwrap_err();
        assert!(err.to_string().contains("t.txt:2") && err.to_string().contains("crow"), "{err}");
    }

    #[test]
    fn round_trip_with_scores() {
        let vocab = ClassVocab::new(["a", "b"]).unwrap();
        let set = EventSet::new(
            vec![
                EventBox::new(0.123456, 0.5, 1, 0.25).unwrap(),
                EventBox::new(2.0, 0.111111, 0, 0.75).unwrap(),
            ],
            3.0,
            vocab.clone(),
        )
        .unwrap();
        let text = render_selection_table(&set, true);
        let back = parse(&text).unwrap().to_event_set(&vocab, Some(3.0)).unwrap();
        assert_eq!(render_selection_table(&back, true), text);
        assert_eq!(back.boxes()[0].score(), 0.25);
    }
}
