//! JSONL reading and writing, and the sidecar error file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::records::ErrorRecord;

/// A decoded line with its 1-based line number.
pub struct Line<T> {
    pub line: usize,
    pub value: Result<T, String>,
}

/// Read a JSONL file. Blank lines are skipped; lines that do not decode
/// are returned as errors rather than aborting the read.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<Line<T>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| Line {
            line: i + 1,
            value: serde_json::from_str(l).map_err(|e| e.to_string()),
        })
        .collect())
}

/// Read a JSONL file where every line must decode.
pub fn read_jsonl_strict<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    read_jsonl(path)?
        .into_iter()
        .map(|l| l.value.map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), l.line)))
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// `out.jsonl` -> `out.errors.jsonl`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("errors.jsonl")
}

/// Write the sidecar when there are errors; remove a stale one otherwise.
pub fn write_sidecar(output: &Path, errors: &[ErrorRecord]) -> anyhow::Result<()> {
    let path = sidecar_path(output);
    if errors.is_empty() {
        if path.exists() {
            std::fs::remove_file(&path).with_context(|| format!("cannot remove {}", path.display()))?;
        }
        return Ok(());
    }
    for e in errors {
        log::warn!(
            "line {} ({}): {}",
            e.line,
            e.example_id.as_deref().unwrap_or("?"),
            e.error
        );
    }
    write_jsonl(&path, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar_path(Path::new("a/out.jsonl")), PathBuf::from("a/out.errors.jsonl"));
        assert_eq!(sidecar_path(Path::new("out")), PathBuf::from("out.errors.jsonl"));
    }

    #[test]
    fn bad_lines_are_kept() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        std::fs::write(&p, "1\n\nnope\n3\n").unwrap();
        let lines: Vec<Line<u32>> = read_jsonl(&p).unwrap();
        let got: Vec<(usize, bool)> = lines.iter().map(|l| (l.line, l.value.is_ok())).collect();
        assert_eq!(got, [(1, true), (3, false), (4, true)]);
        assert!(read_jsonl_strict::<u32>(&p).is_err());
    }
}
