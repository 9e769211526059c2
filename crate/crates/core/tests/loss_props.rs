use proptest::prelude::*;
use sedbox::loss::{build_targets, detection_loss, total_loss, LossConfig};
use sedbox::{Direction, EventBox, FramePredictions};

fn events(max_frames: usize) -> impl Strategy<Value = (f64, usize, Vec<(f64, f64, usize)>)> {
    (prop_oneof![Just(25.0), Just(50.0), Just(100.0)], 1..max_frames).prop_flat_map(|(fr, t)| {
        let last = (t as f64 - 0.51) / fr;
        (
            Just(fr),
            Just(t),
            prop::collection::vec((0.0..=last, 0.01f64..0.6, 0usize..3), 0..8),
        )
    })
}

fn boxes(raw: &[(f64, f64, usize)]) -> Vec<EventBox> {
    raw.iter().map(|&(o, d, c)| EventBox::truth(o, d, c).unwrap()).collect()
}

proptest! {
    #[test]
    fn targets_are_the_max_of_per_event_gaussians((fr, t, raw) in events(120)) {
        let cfg = LossConfig::default();
        let ev = boxes(&raw);
        let tg = build_targets(&ev, fr, t, &cfg).unwrap();
        for (frame, &got) in tg.p_target().iter().enumerate() {
            let mut want: f64 = 0.0;
            for e in &ev {
                let onset = (e.onset() * fr).round();
                let dur = e.duration() * fr;
                let g = if frame as f64 == onset {
                    1.0
                } else {
                    (-(frame as f64 - onset).powi(2) / (dur * dur / cfg.s)).exp()
                };
                want = want.max(g);
            }
            prop_assert!((got - want).abs() <= 1e-12, "frame {}: {} vs {}", frame, got, want);
        }
    }

    #[test]
    fn detection_loss_is_non_negative(
        (fr, t, raw) in events(64),
        seed in prop::collection::vec(0.0f64..=1.0, 64),
    ) {
        let cfg = LossConfig::default();
        let tg = build_targets(&boxes(&raw), fr, t, &cfg).unwrap();
        let l = detection_loss(&seed[..t], &tg, &cfg).unwrap();
        prop_assert!(l.loss >= 0.0);
        prop_assert!(l.grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn total_is_the_weighted_sum(
        (fr, t, raw) in events(48),
        lambda in 0.0f64..3.0,
        rho in 0.0f64..3.0,
        seed in prop::collection::vec(0.01f64..0.99, 48 * 5),
    ) {
        let cfg = LossConfig { lambda, rho, ..LossConfig::default() };
        let tg = build_targets(&boxes(&raw), fr, t, &cfg).unwrap();
        let preds = FramePredictions::new(
            fr,
            seed[..t].to_vec(),
            seed[t..2 * t].to_vec(),
            seed[2 * t..5 * t].iter().map(|v| 4.0 * v - 2.0).collect(),
            3,
            Direction::Forward,
        )
        .unwrap();
        let l = total_loss(&preds, &tg, &cfg).unwrap();
        let sum = l.detection + lambda * l.regression + rho * l.classification;
        prop_assert!((l.total - sum).abs() <= 1e-12 * sum.abs().max(1.0));
        prop_assert!(l.detection >= 0.0 && l.regression >= 0.0 && l.classification >= 0.0);
    }
}
