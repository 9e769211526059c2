use std::path::Path;
use std::process::ExitCode;

use rayon::prelude::*;
use sedbox::decode::{decode, decode_bidirectional, DecodeConfig};
use sedbox::io::{read_predictions, write_selection_table};
use sedbox::{EventBox, EventSet, Result};

use super::{by_name, pair};
use crate::args::{DecodeArgs, DecodeOpts, FuseArgs};

fn config(opts: &DecodeOpts) -> DecodeConfig {
    DecodeConfig {
        detection_threshold: opts.threshold,
        softnms_sigma: opts.sigma,
        softnms_score_floor: opts.score_floor,
        skip_nms: opts.no_nms,
        ..DecodeConfig::default()
    }
}

fn write_boxes(boxes: Vec<EventBox>, clip: f64, vocab: sedbox::ClassVocab, out: &Path) -> Result<usize> {
    let set = EventSet::new(boxes, clip, vocab)?;
    write_selection_table(&set, out, true)?;
    Ok(set.len())
}

pub fn run_decode(args: &DecodeArgs) -> Result<ExitCode> {
    let cfg = config(&args.opts);
    cfg.validate()?;
    let inputs: Vec<_> = by_name(&args.inputs, "csv")?.into_iter().collect();
    let results: Vec<Result<usize>> = inputs
        .par_iter()
        .map(|(name, path)| {
            let (preds, vocab) = read_predictions(path, None)?;
            let clip = preds.num_frames() as f64 / preds.frame_rate();
            let boxes = decode(&preds, &cfg)?;
            write_boxes(boxes, clip, vocab, &args.out_dir.join(format!("{name}.txt")))
        })
        .collect();
    for ((name, _), r) in inputs.iter().zip(results) {
        println!("{name}: {} boxes", r?);
    }
    Ok(ExitCode::SUCCESS)
}

pub fn run_fuse(args: &FuseArgs) -> Result<ExitCode> {
    let cfg = DecodeConfig {
        fusion_iou_threshold: args.fusion_iou,
        unmatched_policy: args.unmatched,
        ..config(&args.opts)
    };
    cfg.validate()?;
    let pairs = pair(&args.forward, &args.backward, "csv")?;
    let results: Vec<Result<String>> = pairs
        .par_iter()
        .map(|(name, fwd_path, bwd_path)| {
            let (fwd, vocab) = read_predictions(fwd_path, None)?;
            let (bwd, _) = read_predictions(bwd_path, Some(&vocab))?;
            let clip = (fwd.num_frames() as f64 / fwd.frame_rate()).max(bwd.num_frames() as f64 / bwd.frame_rate());
            let fused = decode_bidirectional(&fwd, &bwd, &cfg)?;
            let n = write_boxes(fused.boxes, clip, vocab, &args.out_dir.join(format!("{name}.txt")))?;
            Ok(format!(
                "{name}: {n} boxes (matched {}, unmatched forward {}, unmatched backward {}, degenerate {})",
                fused.matched, fused.unmatched_forward, fused.unmatched_backward, fused.degenerate
            ))
        })
        .collect();
    for r in results {
        println!("{}", r?);
    }
    Ok(ExitCode::SUCCESS)
}
