//! Bundled offline data.
//!
//! The toy dataset is a small book graph in which a few hub attributes
//! (`fiction`, `bestseller`, `hardcover`, `book club pick`) touch most books
//! and none of them is something either user asked for. The evaluation
//! fixture reuses the toy graph and catalog with its own users, a
//! ten-explanation corpus and hand-labeled expected verdicts.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const TRIPLES: &str = include_str!("../data/toy/triples.tsv");
pub const CATALOG: &str = include_str!("../data/toy/catalog.jsonl");
pub const HISTORIES: &str = include_str!("../data/toy/histories.jsonl");
pub const CONFIG: &str = include_str!("../data/toy/config.toml");

pub const EVAL_HISTORIES: &str = include_str!("../data/eval10/histories.jsonl");
pub const EVAL_CORPUS: &str = include_str!("../data/eval10/corpus.jsonl");
pub const EVAL_EXPECTED: &str = include_str!("../data/eval10/expected.json");
pub const EVAL_CONFIG: &str = include_str!("../data/eval10/config.toml");

/// Paths of a materialized bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub toy_config: PathBuf,
    pub eval_config: PathBuf,
    pub eval_corpus: PathBuf,
    pub eval_expected: PathBuf,
}

fn put(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `toy/` and `eval10/` under `dir`.
pub fn write_bundle(dir: &Path) -> Result<Bundle> {
    let toy = dir.join("toy");
    let eval = dir.join("eval10");
    for d in [&toy, &eval] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    put(&toy, "triples.tsv", TRIPLES)?;
    put(&toy, "catalog.jsonl", CATALOG)?;
    put(&toy, "histories.jsonl", HISTORIES)?;
    put(&eval, "histories.jsonl", EVAL_HISTORIES)?;
    Ok(Bundle {
        toy_config: put(&toy, "config.toml", CONFIG)?,
        eval_config: put(&eval, "config.toml", EVAL_CONFIG)?,
        eval_corpus: put(&eval, "corpus.jsonl", EVAL_CORPUS)?,
        eval_expected: put(&eval, "expected.json", EVAL_EXPECTED)?,
    })
}
