use std::collections::BTreeMap;
use std::path::Path;

use super::read_text;
use crate::error::{Error, Result};

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(path: &Path, text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::parse(path, i + 1, format!("expected key=value, got {line:?}")));
        };
        let key = k.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(Error::parse(path, i + 1, "empty key"));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_config(path, &read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let m = parse_config(Path::new("c.txt"), "# synth\nR = 0.4\n--seed=7 # trailing\n\n").unwrap();
        assert_eq!(m["R"], "0.4");
        assert_eq!(m["seed"], "7");
        let err = parse_config(Path::new("c.txt"), "a=1\nbroken\n").unwrap_err();
        assert!(err.to_string().contains("c.txt:2"), "{err}");
    }
}
