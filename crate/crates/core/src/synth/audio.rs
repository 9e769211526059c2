use super::SynthSpec;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::EventSet;

/// Mono PCM audio as floats in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcmClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl PcmClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::DegenerateAudio("clip has no samples".into()));
        }
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// First `seconds` of the clip (or all of it if shorter).
    pub fn truncated(&self, seconds: f64) -> Self {
        let n = ((seconds * self.sample_rate as f64).round() as usize).clamp(1, self.samples.len());
        Self {
            samples: self.samples[..n].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

pub fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Gain putting `call` at `snr_db` relative to `background`:
/// `20 log10(rms(g * call) / rms(background)) == snr_db`.
pub fn gain_for_snr(call: &[f64], background: &[f64], snr_db: f64) -> Result<f64> {
    let rc = rms(call);
    let rb = rms(background);
    if rc == 0.0 || rb == 0.0 {
        return Err(Error::DegenerateAudio(format!(
            "zero RMS (call {rc}, background {rb})"
        )));
    }
    Ok(rb / rc * 10f64.powf(snr_db / 20.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixOutput {
    pub clip: PcmClip,
    /// Gain applied to each call, in event order.
    pub gains: Vec<f64>,
    /// SNR drawn for each call; empty when gains were given directly.
    pub snr_db: Vec<f64>,
    /// Samples that had to be clipped to `[-1, 1]`.
    pub clipped_samples: usize,
}

fn span(event_onset: f64, call: &PcmClip, background: &PcmClip, index: usize) -> Result<(usize, usize)> {
    let start = (event_onset * background.sample_rate() as f64).round() as usize;
    let end = start + call.len();
    if end > background.len() {
        return Err(Error::Range(format!(
            "event {index} spans samples {start}..{end} beyond background length {}",
            background.len()
        )));
    }
    Ok((start, end))
}

fn check_inputs(background: &PcmClip, calls: &[PcmClip], events: &EventSet) -> Result<()> {
    if calls.len() != events.len() {
        return Err(Error::Shape(format!("{} calls for {} events", calls.len(), events.len())));
    }
    if let Some(c) = calls.iter().find(|c| c.sample_rate() != background.sample_rate()) {
        return Err(Error::Config(format!(
            "call sample rate {} differs from background {}",
            c.sample_rate(),
            background.sample_rate()
        )));
    }
    Ok(())
}

/// Adds each call at its event onset with a fixed gain, then hard-clips.
pub fn mix_with_gains(background: &PcmClip, calls: &[PcmClip], events: &EventSet, gains: &[f64]) -> Result<MixOutput> {
    check_inputs(background, calls, events)?;
    if gains.len() != calls.len() {
        return Err(Error::Shape(format!("{} gains for {} calls", gains.len(), calls.len())));
    }
    let mut out = background.samples().to_vec();
    for (i, ((ev, call), &g)) in events.boxes().iter().zip(calls).zip(gains).enumerate() {
        let (start, end) = span(ev.onset(), call, background, i)?;
        for (o, s) in out[start..end].iter_mut().zip(call.samples()) {
            *o += g * s;
        }
    }
    let mut clipped = 0;
    for s in &mut out {
        if s.abs() > 1.0 {
            *s = s.clamp(-1.0, 1.0);
            clipped += 1;
        }
    }
    Ok(MixOutput {
        clip: PcmClip::new(out, background.sample_rate())?,
        gains: gains.to_vec(),
        snr_db: Vec::new(),
        clipped_samples: clipped,
    })
}

/// Mixes calls into the background, each at an SNR drawn uniformly from
/// `spec.snr_range_db` against the background under the call.
pub fn mix(background: &PcmClip, calls: &[PcmClip], events: &EventSet, spec: &SynthSpec, rng: &mut Rng) -> Result<MixOutput> {
    check_inputs(background, calls, events)?;
    let (lo, hi) = spec.snr_range_db;
    let mut gains = Vec::with_capacity(calls.len());
    let mut snrs = Vec::with_capacity(calls.len());
    for (i, (ev, call)) in events.boxes().iter().zip(calls).enumerate() {
        let (start, end) = span(ev.onset(), call, background, i)?;
        let snr = rng.uniform_range(lo, hi);
        gains.push(gain_for_snr(call.samples(), &background.samples()[start..end], snr)?);
        snrs.push(snr);
    }
    let mut out = mix_with_gains(background, calls, events, &gains)?;
    out.snr_db = snrs;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ClassVocab, EventBox};

    fn tone(n: usize, amp: f64) -> Vec<f64> {
        (0..n).map(|i| amp * ((i as f64) * 0.3).sin()).collect()
    }

    #[test]
    fn gain_examples() {
        let a = vec![0.5, -0.5];
        assert!((gain_for_snr(&a, &a, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((gain_for_snr(&[0.2, -0.2], &[0.05, -0.05], 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((gain_for_snr(&a, &a, -20.0).unwrap() - 0.1).abs() < 1e-15);
        assert!(matches!(gain_for_snr(&[0.0, 0.0], &a, 0.0), Err(Error::DegenerateAudio(_))));
    }

    #[test]
    fn achieved_snr_matches_request() {
        let call = tone(400, 0.3);
        let bg = tone(400, 0.02);
        let g = gain_for_snr(&call, &bg, -7.5).unwrap();
        let scaled: Vec<f64> = call.iter().map(|s| s * g).collect();
        let snr = 20.0 * (rms(&scaled) / rms(&bg)).log10();
        assert!((snr + 7.5).abs() < 1e-10);
    }

    fn events(onsets: &[f64], dur: f64) -> EventSet {
        EventSet::new(
            onsets.iter().map(|&o| EventBox::truth(o, dur, 0).unwrap()).collect(),
            1.0,
            ClassVocab::single("c"),
        )
        .unwrap()
    }

    #[test]
    fn empty_mix_is_background() {
        let bg = PcmClip::new(tone(1000, 0.1), 1000).unwrap();
        let spec = SynthSpec::new(0.0, vec![0.1]);
        let out = mix(&bg, &[], &events(&[], 0.1), &spec, &mut Rng::new(0, 0)).unwrap();
        assert_eq!(out.clip, bg);
        assert_eq!(out.clipped_samples, 0);
    }

    #[test]
    fn disjoint_calls_add_in_place() {
        let bg = PcmClip::new(tone(1000, 0.1), 1000).unwrap();
        let calls = vec![PcmClip::new(tone(100, 0.2), 1000).unwrap(), PcmClip::new(tone(100, 0.4), 1000).unwrap()];
        let ev = events(&[0.1, 0.5], 0.1);
        let spec = SynthSpec::new(0.0, vec![0.1, 0.1]);
        let out = mix(&bg, &calls, &ev, &spec, &mut Rng::new(5, 0)).unwrap();
        for (k, (start, call)) in [(100usize, &calls[0]), (500, &calls[1])].into_iter().enumerate() {
            for i in 0..100 {
                let expected = bg.samples()[start + i] + out.gains[k] * call.samples()[i];
                assert!((out.clip.samples()[start + i] - expected).abs() < 1e-15);
            }
            assert!((-15.0..=0.0).contains(&out.snr_db[k]));
        }
        assert_eq!(out.clip.samples()[..100], bg.samples()[..100]);
        assert_eq!(out.clip.samples()[300..500], bg.samples()[300..500]);
    }

    #[test]
    fn doubling_gains_is_linear() {
        let bg = PcmClip::new(tone(1000, 0.05), 1000).unwrap();
        let calls = vec![PcmClip::new(tone(100, 0.1), 1000).unwrap(), PcmClip::new(tone(150, 0.1), 1000).unwrap()];
        let ev = events(&[0.2, 0.25], 0.1);
        let once = mix_with_gains(&bg, &calls, &ev, &[0.7, 1.3]).unwrap();
        let twice = mix_with_gains(&bg, &calls, &ev, &[1.4, 2.6]).unwrap();
        assert_eq!(once.clipped_samples + twice.clipped_samples, 0);
        for i in 0..bg.len() {
            let b = bg.samples()[i];
            let expected = b + 2.0 * (once.clip.samples()[i] - b);
            assert!((twice.clip.samples()[i] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn clipping_counted_and_errors() {
        let bg = PcmClip::new(vec![0.9; 10], 10).unwrap();
        let ev = events(&[0.0], 0.5);
        let out = mix_with_gains(&bg, &[PcmClip::new(vec![0.5; 5], 10).unwrap()], &ev, &[1.0]).unwrap();
        assert_eq!(out.clipped_samples, 5);
        assert!(out.clip.samples().iter().all(|s| s.abs() <= 1.0));
        let other_rate = PcmClip::new(vec![0.5; 5], 20).unwrap();
        assert!(mix_with_gains(&bg, &[other_rate], &ev, &[1.0]).is_err());
        let late = events(&[0.8], 0.1);
        assert!(matches!(
            mix_with_gains(&bg, &[PcmClip::new(vec![0.5; 5], 10).unwrap()], &late, &[1.0]),
            Err(Error::Range(_))
        ));
        assert!(PcmClip::new(vec![], 10).is_err());
    }
}
