pub mod decode;
pub mod eval;
pub mod losscheck;
pub mod stats;
pub mod synth;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sedbox::{ClassVocab, Error, Result};

/// Recording name used for output files and pairing.
pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// A file as given, or the files in a directory with extension `ext`,
/// sorted by name.
pub fn list_inputs(path: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if !meta.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == ext) {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("{}: no .{ext} files", path.display())));
    }
    Ok(files)
}

/// Expands several inputs and keys them by recording name, rejecting
/// duplicates.
pub fn by_name(paths: &[PathBuf], ext: &str) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for p in paths {
        for f in list_inputs(p, ext)? {
            let name = stem(&f);
            if let Some(prev) = out.insert(name.clone(), f.clone()) {
                return Err(Error::Config(format!(
                    "recording name {name:?} appears twice: {} and {}",
                    prev.display(),
                    f.display()
                )));
            }
        }
    }
    Ok(out)
}

/// Pairs two single files directly, or two directories by recording name.
pub fn pair(a: &Path, b: &Path, ext: &str) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let (a_dir, b_dir) = (a.is_dir(), b.is_dir());
    if a_dir != b_dir {
        return Err(Error::Config(format!(
            "{} and {} must both be files or both be directories",
            a.display(),
            b.display()
        )));
    }
    if !a_dir {
        std::fs::metadata(a).map_err(|e| Error::io(a, e))?;
        std::fs::metadata(b).map_err(|e| Error::io(b, e))?;
        return Ok(vec![(stem(a), a.to_path_buf(), b.to_path_buf())]);
    }
    let left = by_name(&[a.to_path_buf()], ext)?;
    let mut right = by_name(&[b.to_path_buf()], ext)?;
    let mut out = Vec::with_capacity(left.len());
    for (name, pa) in left {
        let pb = right
            .remove(&name)
            .ok_or_else(|| Error::Config(format!("{} has no counterpart in {}", pa.display(), b.display())))?;
        out.push((name, pa, pb));
    }
    if let Some((_, pb)) = right.into_iter().next() {
        return Err(Error::Config(format!("{} has no counterpart in {}", pb.display(), a.display())));
    }
    Ok(out)
}

/// One class name per line; blank lines and `#` comments are skipped.
pub fn read_vocab(path: &Path) -> Result<ClassVocab> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let names: Vec<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .collect();
    ClassVocab::new(names).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
