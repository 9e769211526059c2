//! Interval arithmetic on event boxes.
//!
//! Intervals are half-open in spirit: boxes that only touch at an endpoint
//! neither overlap nor have positive IoU.

use crate::types::EventBox;

/// Class-agnostic intersection over union of two time intervals.
pub fn iou(a: &EventBox, b: &EventBox) -> f64 {
    let (a0, a1) = (a.onset(), a.offset());
    let (b0, b1) = (b.onset(), b.offset());
    let inter = a1.min(b1) - a0.max(b0);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = (a1 - a0) + (b1 - b0) - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Strict overlap test: `onset_a < offset_b && onset_b < offset_a`.
pub fn overlaps(a: &EventBox, b: &EventBox) -> bool {
    a.onset() < b.offset() && b.onset() < a.offset()
}

/// Number of unordered overlapping pairs.
///
/// With `sources`, pairs whose labels are equal are not counted. Runs in
/// `O(n log n)`.
///
/// # Panics
/// If `sources` is given with a length different from `boxes`.
pub fn count_pairwise_overlaps(boxes: &[EventBox], sources: Option<&[usize]>) -> usize {
    let spans: Vec<(f64, f64)> = boxes.iter().map(|b| (b.onset(), b.offset())).collect();
    let total = count_span_overlaps(spans.clone());
    let Some(sources) = sources else {
        return total;
    };
    assert_eq!(sources.len(), boxes.len(), "one source label per box");
    let mut by_source: std::collections::BTreeMap<usize, Vec<(f64, f64)>> = Default::default();
    for (span, &src) in spans.into_iter().zip(sources) {
        by_source.entry(src).or_default().push(span);
    }
    let same: usize = by_source.into_values().map(count_span_overlaps).sum();
    total - same
}

/// Pair count over raw `(onset, offset)` spans.
pub(crate) fn count_span_overlaps(mut spans: Vec<(f64, f64)>) -> usize {
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let onsets: Vec<f64> = spans.iter().map(|s| s.0).collect();
    // For i < j in onset order, the pair overlaps iff onset_j < offset_i.
    spans
        .iter()
        .enumerate()
        .map(|(i, &(_, off))| {
            let end = onsets.partition_point(|&o| o < off);
            end.saturating_sub(i + 1)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(on: f64, off: f64) -> EventBox {
        EventBox::from_span(on, off, 0, 1.0).unwrap()
    }

    #[test]
    fn iou_examples() {
        assert_eq!(iou(&b(0.0, 1.0), &b(0.0, 1.0)), 1.0);
        assert_eq!(iou(&b(0.0, 1.0), &b(2.0, 3.0)), 0.0);
        assert!((iou(&b(0.0, 1.0), &b(0.5, 1.5)) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou(&b(0.0, 1.0), &b(1.0, 2.0)), 0.0);
    }

    #[test]
    fn iou_ignores_class() {
        let a = EventBox::from_span(0.0, 1.0, 0, 1.0).unwrap();
        let c = EventBox::from_span(0.0, 1.0, 5, 1.0).unwrap();
        assert_eq!(iou(&a, &c), 1.0);
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(count_pairwise_overlaps(&[b(0.0, 1.0), b(2.0, 3.0)], None), 0);
        assert_eq!(
            count_pairwise_overlaps(&[b(0.0, 2.0), b(1.0, 3.0), b(2.5, 4.0)], None),
            2
        );
        assert_eq!(
            count_pairwise_overlaps(&[b(0.0, 1.0), b(0.0, 1.0)], Some(&[3, 3])),
            0
        );
        assert_eq!(
            count_pairwise_overlaps(&[b(0.0, 1.0), b(0.0, 1.0)], Some(&[3, 4])),
            1
        );
        // Touching endpoints do not overlap.
        assert_eq!(count_pairwise_overlaps(&[b(0.0, 1.0), b(1.0, 2.0)], None), 0);
    }

    fn brute(boxes: &[EventBox], sources: Option<&[usize]>) -> usize {
        let mut n = 0;
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                let (a, c) = (&boxes[i], &boxes[j]);
                let same = sources.is_some_and(|s| s[i] == s[j]);
                if !same && a.onset() < c.offset() && c.onset() < a.offset() {
                    n += 1;
                }
            }
        }
        n
    }

    fn arb_boxes(max: usize) -> impl Strategy<Value = Vec<(EventBox, usize)>> {
        prop::collection::vec(
            // Coarse grid so equal onsets and touching endpoints occur.
            (0u32..400, 1u32..40, 0usize..4).prop_map(|(on, dur, src)| {
                (EventBox::truth(on as f64 * 0.05, dur as f64 * 0.05, 0).unwrap(), src)
            }),
            0..max,
        )
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a0 in 0.0f64..10.0, ad in 0.001f64..5.0, b0 in 0.0f64..10.0, bd in 0.001f64..5.0) {
            let a = EventBox::truth(a0, ad, 0).unwrap();
            let c = EventBox::truth(b0, bd, 1).unwrap();
            prop_assert_eq!(iou(&a, &c), iou(&c, &a));
            prop_assert!((0.0..=1.0).contains(&iou(&a, &c)));
            prop_assert_eq!(iou(&a, &a), 1.0);
        }

        #[test]
        fn overlap_count_matches_brute_force(items in arb_boxes(200)) {
            let boxes: Vec<_> = items.iter().map(|x| x.0).collect();
            let sources: Vec<_> = items.iter().map(|x| x.1).collect();
            prop_assert_eq!(count_pairwise_overlaps(&boxes, None), brute(&boxes, None));
            prop_assert_eq!(
                count_pairwise_overlaps(&boxes, Some(&sources)),
                brute(&boxes, Some(&sources))
            );
        }
    }
}
