use super::DecodeConfig;
use crate::types::{Direction, EventBox, FramePredictions};

/// Local maxima at or above `threshold`.
///
/// A frame is a peak when it is strictly greater than its left neighbour and
/// at least its right neighbour; boundary frames only compare against the
/// neighbour they have. On a flat plateau only the leftmost index qualifies.
pub fn find_peaks(p: &[f64], threshold: f64) -> Vec<usize> {
    (0..p.len())
        .filter(|&t| {
            p[t] >= threshold
                && (t == 0 || p[t] > p[t - 1])
                && (t + 1 == p.len() || p[t] >= p[t + 1])
        })
        .collect()
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// One box per detection peak.
///
/// Forward peaks mark onsets and backward peaks mark offsets; the duration
/// head is read at the peak in both cases. Backward onsets are clamped at 0
/// and boxes with a non-positive duration are discarded.
pub fn boxes_from_predictions(preds: &FramePredictions, cfg: &DecodeConfig) -> Vec<EventBox> {
    let fr = preds.frame_rate();
    find_peaks(preds.p_det(), cfg.detection_threshold)
        .into_iter()
        .filter_map(|t| {
            let dur = preds.dur_reg()[t];
            if !(dur > 0.0) {
                return None;
            }
            let class = argmax(preds.logits_at(t));
            let score = preds.p_det()[t];
            let at = t as f64 / fr;
            match preds.direction() {
                Direction::Forward => EventBox::new(at, dur, class, score).ok(),
                Direction::Backward => {
                    let onset = (at - dur).max(0.0);
                    EventBox::new(onset, at - onset, class, score).ok()
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_examples() {
        assert_eq!(find_peaks(&[0.0, 1.0, 0.0], 0.5), vec![1]);
        assert_eq!(find_peaks(&[0.2, 0.2, 0.2], 0.1), vec![0]);
        assert_eq!(find_peaks(&[0.0, 0.6, 0.4, 0.7, 0.0], 0.5), vec![1, 3]);
        assert_eq!(find_peaks(&[0.0, 0.5, 0.5, 0.3], 0.1), vec![1]);
        assert_eq!(find_peaks(&[0.3], 0.1), vec![0]);
        assert_eq!(find_peaks(&[0.3], 0.5), Vec::<usize>::new());
        assert_eq!(find_peaks(&[0.1, 0.4], 0.0), vec![1]);
    }

    fn spike(direction: Direction, frames: usize, at: usize, dur: f64, logits: &[f64]) -> FramePredictions {
        let c = logits.len();
        let mut p = vec![0.0; frames];
        p[at] = 0.9;
        let mut l = vec![0.0; frames * c];
        l[at * c..(at + 1) * c].copy_from_slice(logits);
        FramePredictions::new(50.0, p, vec![dur; frames], l, c, direction).unwrap()
    }

    #[test]
    fn forward_box() {
        let b = boxes_from_predictions(&spike(Direction::Forward, 100, 50, 0.1, &[0.0, 2.0]), &DecodeConfig::default());
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].onset(), 1.0);
        assert_eq!(b[0].duration(), 0.1);
        assert_eq!(b[0].class_id(), 1);
        assert_eq!(b[0].score(), 0.9);
    }

    #[test]
    fn backward_boxes() {
        let cfg = DecodeConfig::default();
        let b = boxes_from_predictions(&spike(Direction::Backward, 100, 55, 0.1, &[1.0]), &cfg);
        assert!((b[0].onset() - 1.0).abs() < 1e-12);
        assert!((b[0].duration() - 0.1).abs() < 1e-12);
        let b = boxes_from_predictions(&spike(Direction::Backward, 100, 2, 0.1, &[1.0]), &cfg);
        assert_eq!(b[0].onset(), 0.0);
        assert!((b[0].duration() - 0.04).abs() < 1e-15);
        // Offset at time zero leaves nothing after clamping.
        assert!(boxes_from_predictions(&spike(Direction::Backward, 100, 0, 0.1, &[1.0]), &cfg).is_empty());
    }

    #[test]
    fn zero_duration_discarded_and_ties_take_lowest_class() {
        let cfg = DecodeConfig::default();
        assert!(boxes_from_predictions(&spike(Direction::Forward, 10, 5, 0.0, &[0.0]), &cfg).is_empty());
        let b = boxes_from_predictions(&spike(Direction::Forward, 10, 5, 0.2, &[1.0, 1.0, 0.5]), &cfg);
        assert_eq!(b[0].class_id(), 0);
    }
}
