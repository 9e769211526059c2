use std::process::ExitCode;

use rayon::prelude::*;
use sedbox::eval::{evaluate, EvalConfig};
use sedbox::io::{write_text, SelectionTable};
use sedbox::{ClassVocab, Result};

use super::{pair, read_vocab};
use crate::args::EvalArgs;

pub fn run(args: &EvalArgs) -> Result<ExitCode> {
    let cfg = EvalConfig {
        iou_thresholds: args.iou.clone(),
        num_points: args.points,
        matching_mode: args.matching,
        ..EvalConfig::default()
    };
    cfg.validate()?;
    let pairs = pair(&args.pred, &args.truth, "txt")?;
    let tables: Vec<(SelectionTable, SelectionTable)> = pairs
        .par_iter()
        .map(|(_, p, t)| Ok((SelectionTable::read(p)?, SelectionTable::read(t)?)))
        .collect::<Result<_>>()?;

    let vocab = match &args.vocab {
        Some(path) => read_vocab(path)?,
        None => {
            let mut names: Vec<String> = Vec::new();
            let truths = tables.iter().map(|(_, t)| t);
            let preds = tables.iter().map(|(p, _)| p);
            for name in truths.chain(preds).flat_map(|t| t.class_names()) {
                if !names.contains(&name) {
                    names.push(name);
                }
            }
            if names.is_empty() {
                names.push("unlabelled".into());
            }
            ClassVocab::new(names)?
        }
    };

    let mut preds = Vec::with_capacity(tables.len());
    let mut truths = Vec::with_capacity(tables.len());
    for (p, t) in &tables {
        preds.push(p.to_event_set(&vocab, None)?);
        truths.push(t.to_event_set(&vocab, None)?);
    }
    let report = evaluate(&preds, &truths, &cfg)?;
    write_text(&args.out, &report.to_csv())?;
    if let Some(path) = &args.pr_out {
        write_text(path, &report.pr_csv())?;
    }
    print!("{}", report.summary());
    Ok(ExitCode::SUCCESS)
}
