use super::{sorted_by_onset, DecodeConfig};
use crate::interval::iou;
use crate::types::EventBox;

/// Gaussian soft non-maximum suppression within each class.
///
/// Repeatedly keeps the best remaining box (ties go to the earlier onset)
/// and multiplies every other same-class box's score by
/// `exp(-iou^2 / sigma)`. Boxes decayed below the score floor are dropped.
/// Output is sorted by onset.
pub fn soft_nms(boxes: &[EventBox], cfg: &DecodeConfig) -> Vec<EventBox> {
    let mut pending: Vec<EventBox> = boxes.to_vec();
    let mut kept = Vec::with_capacity(pending.len());
    while !pending.is_empty() {
        let best = pending
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| {
                a.score()
                    .total_cmp(&b.score())
                    .then_with(|| b.order_key_cmp(a))
                    .then_with(|| j.cmp(i))
            })
            .map(|(i, _)| i)
            .expect("non-empty");
        let chosen = pending.swap_remove(best);
        pending.retain_mut(|other| {
            if other.class_id() != chosen.class_id() {
                return true;
            }
            let overlap = iou(&chosen, other);
            if overlap <= 0.0 {
                return true;
            }
            let decayed = other.score() * (-(overlap * overlap) / cfg.softnms_sigma).exp();
            *other = other.with_score(decayed);
            decayed >= cfg.softnms_score_floor
        });
        kept.push(chosen);
    }
    sorted_by_onset(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(on: f64, dur: f64, class: usize, score: f64) -> EventBox {
        EventBox::new(on, dur, class, score).unwrap()
    }

    #[test]
    fn single_box_unchanged() {
        let b = vec![bx(1.0, 0.1, 0, 0.4)];
        assert_eq!(soft_nms(&b, &DecodeConfig::default()), b);
    }

    #[test]
    fn identical_boxes_decay() {
        let out = soft_nms(&[bx(1.0, 0.1, 0, 0.8), bx(1.0, 0.1, 0, 0.9)], &DecodeConfig::default());
        assert_eq!(out.len(), 2);
        let mut scores: Vec<f64> = out.iter().map(|b| b.score()).collect();
        scores.sort_by(f64::total_cmp);
        assert_eq!(scores[1], 0.9);
        assert!((scores[0] - 0.8 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((scores[0] - 0.108268).abs() < 1e-6);
    }

    #[test]
    fn disjoint_and_cross_class_untouched() {
        let input = vec![bx(0.0, 1.0, 0, 0.5), bx(2.0, 1.0, 0, 0.6), bx(0.0, 1.0, 1, 0.7)];
        let out = soft_nms(&input, &DecodeConfig::default());
        let mut a: Vec<_> = out.iter().map(|b| (b.onset(), b.class_id(), b.score())).collect();
        let mut e: Vec<_> = input.iter().map(|b| (b.onset(), b.class_id(), b.score())).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        e.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, e);
    }

    #[test]
    fn floor_drops_suppressed_boxes() {
        let cfg = DecodeConfig {
            softnms_score_floor: 0.2,
            ..Default::default()
        };
        let out = soft_nms(&[bx(1.0, 0.1, 0, 0.9), bx(1.0, 0.1, 0, 0.8)], &cfg);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].score(), 0.9);
    }

    #[test]
    fn output_sorted_by_onset() {
        let out = soft_nms(
            &[bx(3.0, 0.1, 0, 0.2), bx(1.0, 0.1, 0, 0.3), bx(2.0, 0.1, 0, 0.9)],
            &DecodeConfig::default(),
        );
        let onsets: Vec<f64> = out.iter().map(|b| b.onset()).collect();
        assert_eq!(onsets, vec![1.0, 2.0, 3.0]);
    }
}
