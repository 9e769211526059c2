use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use rayon::prelude::*;
use sedbox::io::{read_wav, write_selection_table, write_text, write_wav};
use sedbox::synth::{mix, place_events, PcmClip, Placement, SynthSpec};
use sedbox::{Error, Result, Rng};

use super::list_inputs;
use crate::args::SynthArgs;

struct AudioBank {
    calls: Vec<PcmClip>,
    backgrounds: Vec<PcmClip>,
}

impl AudioBank {
    fn load(dir: &Path) -> Result<Self> {
        let load_all = |sub: &str| -> Result<Vec<PcmClip>> {
            list_inputs(&dir.join(sub), "wav")?.iter().map(|p| read_wav(p)).collect()
        };
        let bank = Self {
            calls: load_all("calls")?,
            backgrounds: load_all("backgrounds")?,
        };
        let rate = bank.backgrounds[0].sample_rate();
        if bank.calls.iter().chain(&bank.backgrounds).any(|c| c.sample_rate() != rate) {
            return Err(Error::Config(format!("{}: clips must share one sample rate", dir.display())));
        }
        Ok(bank)
    }
}

struct Outcome {
    name: String,
    n: usize,
    stream: u64,
    result: Result<(Placement, Option<usize>)>,
}

fn recording(args: &SynthArgs, bank: Option<&AudioBank>, index: usize, n: usize) -> Result<(Placement, Option<usize>)> {
    let base = Rng::new(args.seed, index as u64);
    let mut draw = base.fork(0);
    let picks: Vec<usize> = match bank {
        Some(b) => (0..n).map(|_| draw.below(b.calls.len() as u64) as usize).collect(),
        None => Vec::new(),
    };
    let durations = match bank {
        Some(b) => picks.iter().map(|&i| b.calls[i].duration()).collect(),
        None => (0..n).map(|_| draw.uniform_range(args.min_duration, args.max_duration)).collect(),
    };
    let mut spec = SynthSpec::new(args.target_ratio, durations);
    spec.clip_duration = args.clip_duration;
    spec.tolerance = args.tolerance;
    spec.max_retries = args.max_retries;
    spec.snr_range_db = (args.snr_low, args.snr_high);
    spec.class_name = args.class.clone();
    let placement = place_events(&spec, &base.fork(1))?;
    let name = format!("rec_{index:03}");
    write_selection_table(&placement.events, &args.out_dir.join(format!("{name}.txt")), false)?;

    let Some(bank) = bank else {
        return Ok((placement, None));
    };
    let mut audio_rng = base.fork(2);
    let bg = &bank.backgrounds[audio_rng.below(bank.backgrounds.len() as u64) as usize];
    if bg.duration() + 1e-9 < args.clip_duration {
        return Err(Error::Config(format!(
            "background of {:.6} s is shorter than the {:.6} s clip",
            bg.duration(),
            args.clip_duration
        )));
    }
    let bg = bg.truncated(args.clip_duration);
    let calls: Vec<PcmClip> = placement.call_index.iter().map(|&i| bank.calls[picks[i]].clone()).collect();
    let mixed = mix(&bg, &calls, &placement.events, &spec, &mut audio_rng)?;
    write_wav(&mixed.clip, &args.out_dir.join(format!("{name}.wav")))?;
    Ok((placement, Some(mixed.clipped_samples)))
}

pub fn run(args: &SynthArgs) -> Result<ExitCode> {
    let counts: Vec<usize> = if !args.n_list.is_empty() {
        args.n_list.clone()
    } else {
        let n = args
            .n
            .ok_or_else(|| Error::Config("either --n or --n-list is required".into()))?;
        vec![n; args.recordings]
    };
    if counts.is_empty() || counts.contains(&0) {
        return Err(Error::Config("every recording needs at least one call".into()));
    }
    if !(args.min_duration > 0.0 && args.min_duration <= args.max_duration) {
        return Err(Error::Config("call durations need 0 < --min-duration <= --max-duration".into()));
    }
    let bank = args.audio_dir.as_deref().map(AudioBank::load).transpose()?;

    let outcomes: Vec<Outcome> = counts
        .par_iter()
        .enumerate()
        .map(|(i, &n)| Outcome {
            name: format!("rec_{i:03}"),
            n,
            stream: i as u64,
            result: recording(args, bank.as_ref(), i, n),
        })
        .collect();

    let audio = bank.is_some();
    let mut manifest = String::from("recording,n,target_ratio,achieved_ratio,overlaps,attempts,seed,stream,status");
    if audio {
        manifest.push_str(",clipped_samples");
    }
    manifest.push('\n');
    let mut failures = 0;
    let total = outcomes.len();
    for o in outcomes {
        match o.result {
            Ok((p, clipped)) => {
                let _ = write!(
                    manifest,
                    "{},{},{:.6},{:.6},{},{},{},{},ok",
                    o.name, o.n, args.target_ratio, p.achieved_ratio, p.overlaps, p.attempts, args.seed, o.stream
                );
                if let Some(c) = clipped {
                    let _ = write!(manifest, ",{c}");
                }
            }
            Err(e) => {
                if e.is_io() {
                    return Err(e);
                }
                failures += 1;
                eprintln!("{}: {e}", o.name);
                let best = match e {
                    Error::Generation { best_ratio, .. } if best_ratio.is_finite() => format!("{best_ratio:.6}"),
                    _ => "nan".into(),
                };
                let _ = write!(
                    manifest,
                    "{},{},{:.6},{best},,,{},{},failed",
                    o.name, o.n, args.target_ratio, args.seed, o.stream
                );
                if audio {
                    manifest.push(',');
                }
            }
        }
        manifest.push('\n');
    }
    let manifest_path: PathBuf = args.out_dir.join("manifest.csv");
    write_text(&manifest_path, &manifest)?;
    println!(
        "{} of {} recordings generated at R = {:.6}; manifest in {}",
        total - failures,
        total,
        args.target_ratio,
        manifest_path.display()
    );
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
