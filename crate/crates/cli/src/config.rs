//! Splices `--config` file entries into argv ahead of clap parsing.

use std::ffi::OsString;
use std::path::PathBuf;

use sedbox::{Error, Result};

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn given(argv: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let prefix = format!("--{long}=");
    argv.iter().any(|a| {
        let a = a.to_string_lossy();
        a == flag || a.starts_with(&prefix)
    })
}

/// Returns argv with every config entry not already on the command line
/// inserted right after the subcommand name.
pub fn merge_config(argv: Vec<OsString>, cmd: &clap::Command) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some(pos) = argv
        .iter()
        .position(|a| cmd.find_subcommand(a.to_string_lossy().as_ref()).is_some())
    else {
        return Ok(argv);
    };
    let sub = cmd
        .find_subcommand(argv[pos].to_string_lossy().as_ref())
        .expect("position found above");
    let entries = sedbox::io::read_config(&path)?;

    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        let long = key.replace('_', "-");
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(long.as_str()) || a.get_long() == Some(key.as_str()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "{}: {key:?} is not an option of `{}`",
                    path.display(),
                    sub.get_name()
                ))
            })?;
        let long = arg.get_long().expect("matched by long name");
        if long == "config" || given(&argv, long) {
            continue;
        }
        if arg.get_action().takes_values() {
            extra.push(format!("--{long}").into());
            extra.push(value.into());
        } else {
            match value.as_str() {
                "true" | "1" | "yes" => extra.push(format!("--{long}").into()),
                "false" | "0" | "no" => {}
                other => {
                    return Err(Error::Config(format!(
                        "{}: {key} expects true or false, got {other:?}",
                        path.display()
                    )))
                }
            }
        }
    }
    let mut out = argv;
    out.splice(pos + 1..pos + 1, extra);
    Ok(out)
}
