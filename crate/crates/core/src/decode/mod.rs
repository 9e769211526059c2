//! From per-frame predictions to event boxes.
//!
//! Peaks of the detection series become boxes, forward and backward boxes
//! are paired by maximum bipartite matching on an IoU graph and fused, and
//! Gaussian soft-NMS removes duplicates.

mod fusion;
mod matching;
mod nms;
mod peaks;

pub use fusion::{fuse_bidirectional, FusionOutput};
pub use matching::{hopcroft_karp, max_bipartite_matching};
pub use nms::soft_nms;
pub use peaks::{boxes_from_predictions, find_peaks};

use crate::error::{Error, Result};
use crate::types::{EventBox, FramePredictions};

/// What to do with boxes that found no partner in the other direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnmatchedPolicy {
    /// Unmatched forward boxes pass through, unmatched backward boxes are dropped.
    #[default]
    KeepForward,
    KeepBoth,
    Drop,
}

impl std::str::FromStr for UnmatchedPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keep-forward" | "keep_forward" => Ok(Self::KeepForward),
            "keep-both" | "keep_both" => Ok(Self::KeepBoth),
            "drop" => Ok(Self::Drop),
            other => Err(Error::Config(format!("unknown unmatched policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    /// Minimum peak height. Low by default so evaluation can sweep scores.
    pub detection_threshold: f64,
    pub softnms_sigma: f64,
    pub softnms_score_floor: f64,
    pub fusion_iou_threshold: f64,
    pub unmatched_policy: UnmatchedPolicy,
    /// Disable soft-NMS entirely.
    pub skip_nms: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            detection_threshold: 0.01,
            softnms_sigma: 0.5,
            softnms_score_floor: 0.005,
            fusion_iou_threshold: 0.5,
            unmatched_policy: UnmatchedPolicy::KeepForward,
            skip_nms: false,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.detection_threshold) {
            return Err(Error::Config("detection threshold must lie in [0, 1]".into()));
        }
        if !(self.softnms_sigma.is_finite() && self.softnms_sigma > 0.0) {
            return Err(Error::Config("soft-NMS sigma must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.softnms_score_floor) {
            return Err(Error::Config("soft-NMS score floor must lie in [0, 1]".into()));
        }
        if !(self.fusion_iou_threshold > 0.0 && self.fusion_iou_threshold <= 1.0) {
            return Err(Error::Config("fusion IoU threshold must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Single-direction decode: peaks to boxes, then soft-NMS unless disabled.
pub fn decode(preds: &FramePredictions, cfg: &DecodeConfig) -> Result<Vec<EventBox>> {
    cfg.validate()?;
    let boxes = boxes_from_predictions(preds, cfg);
    Ok(if cfg.skip_nms {
        sorted_by_onset(boxes)
    } else {
        soft_nms(&boxes, cfg)
    })
}

/// Decodes both heads (each according to its own declared direction) and
/// fuses the resulting boxes.
pub fn decode_bidirectional(forward: &FramePredictions, backward: &FramePredictions, cfg: &DecodeConfig) -> Result<FusionOutput> {
    cfg.validate()?;
    if forward.num_classes() != backward.num_classes() {
        return Err(Error::Shape(format!(
            "forward head has {} classes, backward head {}",
            forward.num_classes(),
            backward.num_classes()
        )));
    }
    fuse_bidirectional(&boxes_from_predictions(forward, cfg), &boxes_from_predictions(backward, cfg), cfg)
}

pub(crate) fn sorted_by_onset(mut boxes: Vec<EventBox>) -> Vec<EventBox> {
    boxes.sort_by(|a, b| a.order_key_cmp(b).then(b.score().total_cmp(&a.score())));
    boxes
}
