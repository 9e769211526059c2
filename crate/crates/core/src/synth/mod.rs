//! Synthetic recordings with a controlled overlap-to-call ratio.

mod audio;

pub use audio::{gain_for_snr, mix, mix_with_gains, rms, MixOutput, PcmClip};

use crate::error::{Error, Result};
use crate::interval::count_pairwise_overlaps;
use crate::rng::Rng;
use crate::types::{ClassVocab, EventBox, EventSet};

/// Attempts per call when looking for a spot that overlaps nothing.
const FREE_SPOT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub clip_duration: f64,
    /// Target overlapping pairs per call.
    pub target_ratio: f64,
    /// One entry per call, placed in this order.
    pub call_durations: Vec<f64>,
    pub snr_range_db: (f64, f64),
    pub tolerance: f64,
    pub max_retries: usize,
    pub class_name: String,
}

impl SynthSpec {
    pub fn new(target_ratio: f64, call_durations: Vec<f64>) -> Self {
        Self {
            clip_duration: 60.0,
            target_ratio,
            call_durations,
            snr_range_db: (-15.0, 0.0),
            tolerance: 0.005,
            max_retries: 100,
            class_name: "zf".to_string(),
        }
    }

    pub fn n_calls(&self) -> usize {
        self.call_durations.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.call_durations.is_empty() {
            return Err(Error::Config("need at least one call".into()));
        }
        if !(self.clip_duration.is_finite() && self.clip_duration > 0.0) {
            return Err(Error::Config("clip duration must be positive".into()));
        }
        if let Some(d) = self.call_durations.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::Config(format!("call duration {d} must be positive")));
        }
        if !(0.0..=1.0).contains(&self.target_ratio) {
            return Err(Error::Config("target ratio must lie in [0, 1]".into()));
        }
        let (lo, hi) = self.snr_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config("SNR range must satisfy low <= high".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config("tolerance must be non-negative".into()));
        }
        let total: f64 = self.call_durations.iter().sum();
        if total >= self.clip_duration {
            return Err(Error::Config(format!(
                "total call duration {total:.3} s does not fit in {:.3} s",
                self.clip_duration
            )));
        }
        Ok(())
    }

    fn within_tolerance(&self, overlaps: usize) -> bool {
        let n = self.n_calls() as f64;
        (overlaps as f64 - self.target_ratio * n).abs() <= self.tolerance * n + 1e-9
    }

    /// Whole number of overlapping pairs inside the tolerance band closest
    /// to `target_ratio * n`, if any.
    pub fn target_overlaps(&self) -> Option<usize> {
        let n = self.n_calls();
        let max_pairs = n * (n - 1) / 2;
        let ideal = self.target_ratio * n as f64;
        let below = ideal.floor().max(0.0) as usize;
        [below.min(max_pairs), (below + 1).min(max_pairs)]
            .into_iter()
            .filter(|&k| self.within_tolerance(k))
            .min_by(|&a, &b| (a as f64 - ideal).abs().total_cmp(&(b as f64 - ideal).abs()))
    }

    pub fn tolerance_reachable(&self) -> bool {
        self.target_overlaps().is_some()
    }
}

/// A successful generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub events: EventSet,
    pub overlaps: usize,
    pub achieved_ratio: f64,
    /// Attempts consumed, including the successful one.
    pub attempts: usize,
    /// For each event (in normalized order), the index of its call in
    /// `call_durations`.
    pub call_index: Vec<usize>,
}

/// Overlapping pairs per event.
pub fn achieved_overlap_ratio(events: &EventSet) -> Result<f64> {
    if events.is_empty() {
        return Err(Error::Domain("overlap ratio of an empty event set is undefined".into()));
    }
    Ok(count_pairwise_overlaps(events.boxes(), None) as f64 / events.len() as f64)
}

/// Sequentially places calls to approach the target overlap ratio.
///
/// Above a target of 0.2 the first quarter of the calls is placed uniformly.
/// After that a call overlaps a uniformly chosen earlier call while the
/// running ratio is below target, and otherwise goes to a spot that overlaps
/// nothing. The target used for steering is the closest overlap count inside
/// the tolerance band, divided by `n`. Attempts missing the tolerance are
/// retried on fresh substreams of `rng`.
pub fn place_events(spec: &SynthSpec, rng: &Rng) -> Result<Placement> {
    spec.validate()?;
    let Some(target_count) = spec.target_overlaps() else {
        return Err(Error::Generation {
            reason: format!(
                "no whole number of overlaps among {} calls lies within {} of ratio {}",
                spec.n_calls(),
                spec.tolerance,
                spec.target_ratio
            ),
            best_ratio: f64::NAN,
        });
    };
    let n = spec.n_calls();
    // Steer towards the reachable count rather than the raw ratio, which
    // `n` calls may not be able to express exactly.
    let steer_ratio = target_count as f64 / n as f64;
    let mut best = f64::NAN;
    for attempt in 0..spec.max_retries.max(1) {
        let mut sub = rng.fork(attempt as u64);
        let Some((spans, overlaps)) = try_place(spec, steer_ratio, &mut sub) else {
            continue;
        };
        let ratio = overlaps as f64 / n as f64;
        if best.is_nan() || (ratio - spec.target_ratio).abs() < (best - spec.target_ratio).abs() {
            best = ratio;
        }
        if spec.within_tolerance(overlaps) {
            let mut call_index: Vec<usize> = (0..n).collect();
            call_index.sort_by(|&a, &b| spans[a].0.total_cmp(&spans[b].0).then(spans[a].1.total_cmp(&spans[b].1)));
            let boxes = call_index
                .iter()
                .map(|&i| EventBox::truth(spans[i].0, spans[i].1, 0))
                .collect::<Result<Vec<_>>>()?;
            let events = EventSet::new(boxes, spec.clip_duration, ClassVocab::new([spec.class_name.as_str()])?)?;
            return Ok(Placement {
                events,
                overlaps,
                achieved_ratio: ratio,
                attempts: attempt + 1,
                call_index,
            });
        }
    }
    Err(Error::Generation {
        reason: format!(
            "ratio {} not reached within {} after {} attempts",
            spec.target_ratio, spec.tolerance, spec.max_retries
        ),
        best_ratio: best,
    })
}

/// One placement pass. Returns `(onset, duration)` per call in input order
/// and the number of overlapping pairs, or `None` when no free spot was found.
fn try_place(spec: &SynthSpec, steer_ratio: f64, rng: &mut Rng) -> Option<(Vec<(f64, f64)>, usize)> {
    let n = spec.n_calls();
    let clip = spec.clip_duration;
    let uniform_first = if spec.target_ratio > 0.2 { n.div_ceil(4) } else { 0 };
    let mut placed: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut overlaps = 0usize;
    let hits = |placed: &[(f64, f64)], on: f64, dur: f64| {
        placed
            .iter()
            .filter(|&&(o, d)| on < o + d && o < on + dur)
            .count()
    };

    for (i, &dur) in spec.call_durations.iter().enumerate() {
        let latest = clip - dur;
        let onset = if i < uniform_first || placed.is_empty() {
            rng.uniform_range(0.0, latest)
        } else if (overlaps as f64) < steer_ratio * placed.len() as f64 {
            let (a_on, a_dur) = placed[rng.below(placed.len() as u64) as usize];
            let lo = a_on - dur;
            let hi = a_on + a_dur;
            (lo + (hi - lo) * rng.uniform_open()).clamp(0.0, latest)
        } else {
            let mut spot = None;
            for _ in 0..FREE_SPOT_ATTEMPTS {
                let on = rng.uniform_range(0.0, latest);
                if hits(&placed, on, dur) == 0 {
                    spot = Some(on);
                    break;
                }
            }
            spot?
        };
        overlaps += hits(&placed, onset, dur);
        placed.push((onset, dur));
    }
    Some((placed, overlaps))
}
