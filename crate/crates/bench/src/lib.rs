//! Deterministic workloads shared by the benchmarks in `benches/`.

use sedbox::{ClassVocab, Direction, EventBox, EventSet, FramePredictions, Rng};

/// A one-class detection head over `seconds` of audio with a call roughly
/// every `spacing` seconds.
pub fn synthetic_head(seconds: f64, frame_rate: f64, spacing: f64, seed: u64) -> FramePredictions {
    let frames = (seconds * frame_rate) as usize;
    let mut rng = Rng::new(seed, 0);
    let mut p = vec![0.0; frames];
    let mut d = vec![0.0; frames];
    let step = ((spacing * frame_rate) as usize).max(2);
    let mut t = rng.below(step as u64) as usize;
    while t < frames {
        let score = rng.uniform_range(0.05, 1.0);
        for (k, v) in p[t.saturating_sub(3)..(t + 4).min(frames)].iter_mut().enumerate() {
            *v = f64::max(*v, score * (1.0 - 0.25 * (k as f64 - 3.0).abs()));
        }
        d[t] = rng.uniform_range(0.05, 0.3);
        t += step / 2 + rng.below(step as u64) as usize;
    }
    FramePredictions::new(frame_rate, p, d, vec![0.0; frames], 1, Direction::Forward).unwrap()
}

/// Random scored boxes over a clip, all of class 0.
pub fn random_boxes(n: usize, clip: f64, seed: u64) -> Vec<EventBox> {
    let mut rng = Rng::new(seed, 1);
    (0..n)
        .map(|_| {
            let dur = rng.uniform_range(0.05, 0.3);
            EventBox::new(rng.uniform_range(0.0, clip - dur), dur, 0, rng.uniform_range(0.01, 1.0)).unwrap()
        })
        .collect()
}

/// Truth and jittered prediction sets for `recordings` one-minute clips.
pub fn eval_corpus(recordings: usize, calls: usize, seed: u64) -> (Vec<EventSet>, Vec<EventSet>) {
    let vocab = ClassVocab::single("zf");
    let mut rng = Rng::new(seed, 2);
    let mut preds = Vec::new();
    let mut truths = Vec::new();
    for r in 0..recordings {
        let truth = random_boxes(calls, 60.0, seed ^ r as u64);
        let pred: Vec<EventBox> = truth
            .iter()
            .map(|b| {
                let shift = rng.uniform_range(-0.03, 0.03);
                EventBox::new((b.onset() + shift).max(0.0), b.duration(), 0, rng.uniform_range(0.01, 1.0)).unwrap()
            })
            .collect();
        truths.push(EventSet::new(truth, 60.0, vocab.clone()).unwrap());
        preds.push(EventSet::new(pred, 60.0, vocab.clone()).unwrap());
    }
    (preds, truths)
}
