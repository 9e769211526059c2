use super::{max_bipartite_matching, soft_nms, sorted_by_onset, DecodeConfig, UnmatchedPolicy};
use crate::error::Result;
use crate::types::EventBox;

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput {
    pub boxes: Vec<EventBox>,
    pub matched: usize,
    pub unmatched_forward: usize,
    pub unmatched_backward: usize,
    /// Fused pairs whose offset did not exceed their onset.
    pub degenerate: usize,
}

/// Fuses forward (onset-anchored) and backward (offset-anchored) boxes.
///
/// Matched pairs take the midpoint of both onsets and of both offsets; the
/// score is the mean of the pair and the class comes from the higher-scoring
/// member, forward on ties. Unmatched boxes follow `cfg.unmatched_policy`,
/// then the result goes through soft-NMS unless `cfg.skip_nms` is set.
pub fn fuse_bidirectional(forward: &[EventBox], backward: &[EventBox], cfg: &DecodeConfig) -> Result<FusionOutput> {
    cfg.validate()?;
    let pairs = max_bipartite_matching(forward, backward, cfg.fusion_iou_threshold);
    let mut used_fwd = vec![false; forward.len()];
    let mut used_bwd = vec![false; backward.len()];
    let mut boxes = Vec::with_capacity(forward.len() + backward.len());
    let mut degenerate = 0;

    for &(i, j) in &pairs {
        used_fwd[i] = true;
        used_bwd[j] = true;
        let (f, b) = (&forward[i], &backward[j]);
        // The backward box's onset is its offset minus its duration, and the
        // midpoint of the offsets minus the midpoint of the onsets is the mean
        // duration.
        let onset = (f.onset() + b.onset()) / 2.0;
        let duration = (f.duration() + b.duration()) / 2.0;
        let score = (f.score() + b.score()) / 2.0;
        let class = if b.score() > f.score() { b.class_id() } else { f.class_id() };
        match EventBox::new(onset, duration, class, score) {
            Ok(fused) => boxes.push(fused),
            Err(_) => degenerate += 1,
        }
    }

    let keep_fwd = matches!(cfg.unmatched_policy, UnmatchedPolicy::KeepForward | UnmatchedPolicy::KeepBoth);
    let keep_bwd = cfg.unmatched_policy == UnmatchedPolicy::KeepBoth;
    if keep_fwd {
        boxes.extend(forward.iter().zip(&used_fwd).filter(|(_, &u)| !u).map(|(b, _)| *b));
    }
    if keep_bwd {
        boxes.extend(backward.iter().zip(&used_bwd).filter(|(_, &u)| !u).map(|(b, _)| *b));
    }

    let boxes = if cfg.skip_nms {
        sorted_by_onset(boxes)
    } else {
        soft_nms(&boxes, cfg)
    };
    Ok(FusionOutput {
        boxes,
        matched: pairs.len(),
        unmatched_forward: used_fwd.iter().filter(|u| !**u).count(),
        unmatched_backward: used_bwd.iter().filter(|u| !**u).count(),
        degenerate,
    })
}
