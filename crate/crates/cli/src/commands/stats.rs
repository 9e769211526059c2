use std::process::ExitCode;

use sedbox::io::{read_overlap_table, render_overlap_table, write_text};
use sedbox::Result;

use crate::args::StatsArgs;

pub fn run(args: &StatsArgs) -> Result<ExitCode> {
    let rows = read_overlap_table(&args.input, args.window)?;
    let (_, t, csv) = render_overlap_table(&rows, args.t_denominator)?;
    match &args.out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    println!(
        "t = {:.6} (mean difference {:.6}, sd {:.6}, N {}, denominator {}){}",
        t.t,
        t.mean_diff,
        t.sd_diff,
        rows.len(),
        args.t_denominator.as_str(),
        if t.degenerate { ", degenerate: zero spread" } else { "" }
    );
    Ok(ExitCode::SUCCESS)
}
