use std::process::ExitCode;

use sedbox::io::{read_predictions, SelectionTable};
use sedbox::loss::{build_targets, gradient_report, total_loss, LossConfig};
use sedbox::Result;

use crate::args::LossArgs;

pub fn run(args: &LossArgs) -> Result<ExitCode> {
    let cfg = LossConfig {
        alpha: args.alpha,
        beta: args.beta,
        s: args.s,
        lambda: args.lambda,
        rho: args.rho,
        ..LossConfig::default()
    };
    cfg.validate()?;
    let (preds, vocab) = read_predictions(&args.predictions, None)?;
    let clip = preds.num_frames() as f64 / preds.frame_rate();
    let truth = SelectionTable::read(&args.truth)?.to_event_set(&vocab, Some(clip))?;
    let targets = build_targets(truth.boxes(), preds.frame_rate(), preds.num_frames(), &cfg)?;
    let loss = total_loss(&preds, &targets, &cfg)?;
    println!("detection      {:.6}", loss.detection);
    println!("regression     {:.6}", loss.regression);
    println!("classification {:.6}", loss.classification);
    println!("total          {:.6}", loss.total);

    let report = gradient_report(&preds, &targets, &cfg, args.step, args.rel_tol, args.abs_tol)?;
    let mut failures = 0;
    for (head, r) in ["p_det", "dur_reg", "logits"].iter().zip(&report) {
        println!(
            "grad {head:<8} checked {:>6}  failures {:>4}  max abs err {:.3e}  max rel err {:.3e}",
            r.checked, r.failures, r.max_abs_err, r.max_rel_err
        );
        failures += r.failures;
    }
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
