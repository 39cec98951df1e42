#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bmf() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bmf"));
    cmd.env_remove("BMF_THREADS").env_remove("RUST_LOG");
    cmd
}

/// Runs `bmf args...` and panics with its stderr unless it succeeds.
pub fn run_ok(args: &[&str]) -> Output {
    let out = bmf().args(args).output().expect("spawn bmf");
    assert!(
        out.status.success(),
        "bmf {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn run_err(args: &[&str]) -> Output {
    let out = bmf().args(args).output().expect("spawn bmf");
    assert!(!out.status.success(), "bmf {args:?} unexpectedly succeeded");
    out
}

pub fn s(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

/// `csv` rows as string fields, header first.
pub fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

/// Every file below `dir`, relative and sorted.
pub fn files_under(dir: &Path) -> Vec<PathBuf> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
