//! Domain types shared by every pipeline stage.
//!
//! All times are seconds stored as `f64`. Frame indices only appear inside
//! [`crate::loss`] and [`crate::decode`].

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// One annotated or detected event on the time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventBox {
    onset: f64,
    duration: f64,
    class_id: usize,
    score: f64,
}

impl EventBox {
    pub fn new(onset: f64, duration: f64, class_id: usize, score: f64) -> Result<Self> {
        if !onset.is_finite() || onset < 0.0 {
            return Err(Error::InvalidBox(format!("onset {onset} must be finite and >= 0")));
        }
        if !duration.is_finite() || duration <= 0.0 {
            return Err(Error::InvalidBox(format!("duration {duration} must be finite and > 0")));
        }
        if !(onset + duration).is_finite() {
            return Err(Error::InvalidBox("offset is not finite".into()));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidBox(format!("score {score} outside [0, 1]")));
        }
        Ok(Self {
            onset,
            duration,
            class_id,
            score,
        })
    }

    /// A ground-truth box (score 1).
    pub fn truth(onset: f64, duration: f64, class_id: usize) -> Result<Self> {
        Self::new(onset, duration, class_id, 1.0)
    }

    /// Builds a box from its two endpoints.
    pub fn from_span(onset: f64, offset: f64, class_id: usize, score: f64) -> Result<Self> {
        Self::new(onset, offset - onset, class_id, score)
    }

    pub fn onset(&self) -> f64 {
        self.onset
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn offset(&self) -> f64 {
        self.onset + self.duration
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    /// Same box with a different score, clamped into `[0, 1]`.
    pub fn with_score(mut self, score: f64) -> Self {
        self.score = score.clamp(0.0, 1.0);
        self
    }

    /// Total order used wherever boxes are normalized: onset, duration, class.
    pub fn order_key_cmp(&self, other: &Self) -> Ordering {
        self.onset
            .total_cmp(&other.onset)
            .then(self.duration.total_cmp(&other.duration))
            .then(self.class_id.cmp(&other.class_id))
    }
}

impl fmt::Display for EventBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:.6}, {:.6}] class {} score {:.6}",
            self.onset,
            self.offset(),
            self.class_id,
            self.score
        )
    }
}

/// Ordered list of class names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassVocab {
    names: Vec<String>,
}

impl ClassVocab {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::Config("class vocabulary is empty".into()));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Config(format!("class name {i} is empty")));
            }
            if names[..i].contains(name) {
                return Err(Error::Config(format!("duplicate class name {name:?}")));
            }
        }
        Ok(Self { names })
    }

    /// Single-class vocabulary, handy for symbolic data.
    pub fn single(name: &str) -> Self {
        Self {
            names: vec![name.to_string()],
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, class_id: usize) -> Option<&str> {
        self.names.get(class_id).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Every event of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSet {
    boxes: Vec<EventBox>,
    clip_duration: f64,
    vocab: ClassVocab,
}

impl EventSet {
    /// Builds a normalized set. Class ids must index into `vocab`.
    pub fn new(mut boxes: Vec<EventBox>, clip_duration: f64, vocab: ClassVocab) -> Result<Self> {
        if !clip_duration.is_finite() || clip_duration < 0.0 {
            return Err(Error::Config(format!("clip duration {clip_duration} is invalid")));
        }
        if let Some(b) = boxes.iter().find(|b| b.class_id() >= vocab.len()) {
            return Err(Error::Index(format!(
                "class id {} not in vocabulary of {} classes",
                b.class_id(),
                vocab.len()
            )));
        }
        boxes.sort_by(EventBox::order_key_cmp);
        Ok(Self {
            boxes,
            clip_duration,
            vocab,
        })
    }

    pub fn empty(clip_duration: f64, vocab: ClassVocab) -> Self {
        Self {
            boxes: Vec::new(),
            clip_duration,
            vocab,
        }
    }

    pub fn boxes(&self) -> &[EventBox] {
        &self.boxes
    }

    pub fn into_boxes(self) -> Vec<EventBox> {
        self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn clip_duration(&self) -> f64 {
        self.clip_duration
    }

    pub fn vocab(&self) -> &ClassVocab {
        &self.vocab
    }

    /// Indices of boxes extending past `clip_duration`.
    pub fn out_of_bounds(&self) -> Vec<usize> {
        self.boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.offset() > self.clip_duration)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn check_bounds(&self) -> Result<()> {
        match self.out_of_bounds().first() {
            None => Ok(()),
            Some(&i) => Err(Error::Range(format!(
                "event {i} ({}) ends after clip duration {:.6}",
                self.boxes[i], self.clip_duration
            ))),
        }
    }
}

/// Whether a prediction series marks onsets (forward) or offsets (backward).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(Error::Config(format!("unknown direction {other:?}"))),
        }
    }
}

/// Per-frame outputs of the detection head for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePredictions {
    frame_rate: f64,
    p_det: Vec<f64>,
    dur_reg: Vec<f64>,
    logits: Vec<f64>,
    num_classes: usize,
    direction: Direction,
}

impl FramePredictions {
    /// `class_logits` is row-major, `num_frames * num_classes` long.
    pub fn new(
        frame_rate: f64,
        p_det: Vec<f64>,
        dur_reg: Vec<f64>,
        class_logits: Vec<f64>,
        num_classes: usize,
        direction: Direction,
    ) -> Result<Self> {
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(Error::Config(format!("frame rate {frame_rate} must be positive")));
        }
        if num_classes == 0 {
            return Err(Error::Config("need at least one class".into()));
        }
        let t = p_det.len();
        if dur_reg.len() != t || class_logits.len() != t * num_classes {
            return Err(Error::Shape(format!(
                "p_det has {t} frames, dur_reg {} frames, logits {} values for {num_classes} classes",
                dur_reg.len(),
                class_logits.len()
            )));
        }
        if let Some(i) = p_det.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Range(format!("p_det[{i}] = {} outside [0, 1]", p_det[i])));
        }
        if let Some(i) = dur_reg.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::Range(format!("dur_reg[{i}] = {} is negative", dur_reg[i])));
        }
        if let Some(i) = class_logits.iter().position(|v| !v.is_finite()) {
            return Err(Error::Range(format!("logit {i} is not finite")));
        }
        Ok(Self {
            frame_rate,
            p_det,
            dur_reg,
            logits: class_logits,
            num_classes,
            direction,
        })
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn num_frames(&self) -> usize {
        self.p_det.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn p_det(&self) -> &[f64] {
        &self.p_det
    }

    pub fn dur_reg(&self) -> &[f64] {
        &self.dur_reg
    }

    pub fn class_logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_at(&self, frame: usize) -> &[f64] {
        &self.logits[frame * self.num_classes..(frame + 1) * self.num_classes]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_rejects_bad_fields() {
        assert!(EventBox::truth(-0.1, 1.0, 0).is_err());
        assert!(EventBox::truth(0.0, 0.0, 0).is_err());
        assert!(EventBox::truth(0.0, f64::INFINITY, 0).is_err());
        assert!(EventBox::new(0.0, 1.0, 0, 1.5).is_err());
        let b = EventBox::from_span(1.0, 1.5, 2, 0.3).unwrap();
        assert_eq!(b.offset(), 1.5);
    }

    #[test]
    fn vocab_rules() {
        assert!(ClassVocab::new(Vec::<String>::new()).is_err());
        assert!(ClassVocab::new(["a", "a"]).is_err());
        assert!(ClassVocab::new(["a", ""]).is_err());
        let v = ClassVocab::new(["zf", "bg"]).unwrap();
        assert_eq!(v.index_of("bg"), Some(1));
        assert_eq!(v.name(0), Some("zf"));
    }

    #[test]
    fn event_set_normalizes_and_flags_bounds() {
        let v = ClassVocab::single("x");
        let set = EventSet::new(
            vec![
                EventBox::truth(2.0, 1.0, 0).unwrap(),
                EventBox::truth(1.0, 0.5, 0).unwrap(),
                EventBox::truth(1.0, 0.2, 0).unwrap(),
            ],
            2.5,
            v.clone(),
        )
        .unwrap();
        let onsets: Vec<_> = set.boxes().iter().map(|b| (b.onset(), b.duration())).collect();
        assert_eq!(onsets, vec![(1.0, 0.2), (1.0, 0.5), (2.0, 1.0)]);
        assert_eq!(set.out_of_bounds(), vec![2]);
        assert!(set.check_bounds().is_err());
        assert!(EventSet::new(vec![EventBox::truth(0.0, 1.0, 3).unwrap()], 5.0, v).is_err());
    }

    #[test]
    fn predictions_validate_shapes() {
        let ok = FramePredictions::new(50.0, vec![0.1, 0.2], vec![0.0, 0.1], vec![0.0; 4], 2, Direction::Forward);
        assert!(ok.is_ok());
        assert_eq!(ok.unwrap().logits_at(1).len(), 2);
        assert!(matches!(
            FramePredictions::new(50.0, vec![0.1], vec![0.0, 0.1], vec![0.0; 2], 2, Direction::Forward),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            FramePredictions::new(50.0, vec![1.5], vec![0.0], vec![0.0], 1, Direction::Forward),
            Err(Error::Range(_))
        ));
        assert!(FramePredictions::new(50.0, vec![0.5], vec![-0.1], vec![0.0], 1, Direction::Forward).is_err());
    }
}
