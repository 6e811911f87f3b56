use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use spk_core::maskio::corpus;
use spk_core::taxonomy::{parse_taxonomy, Taxonomy};

use crate::fail::{invalid, CmdResult};
use crate::Strictness;

/// The only directory a subcommand writes to.
pub struct OutDir {
    root: PathBuf,
}

#[derive(Serialize)]
struct RunJson<'a> {
    command: &'a str,
    config: serde_json::Value,
    schema_version: &'static str,
    tool: &'static str,
    version: &'static str,
}

impl OutDir {
    pub fn create(root: &Path) -> CmdResult<Self> {
        std::fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    /// `rel` is built from file stems found in input directories, never from
    /// absolute paths, so it cannot escape the root.
    pub fn write(&self, rel: &str, bytes: &[u8]) -> CmdResult {
        debug_assert!(!rel.starts_with('/') && !rel.split('/').any(|c| c == ".."));
        corpus::write_file(&self.root.join(rel), bytes)?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> CmdResult {
        self.write(rel, spk_core::json::to_json(value)?.as_bytes())
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Echoes the resolved configuration. serde_json maps are ordered, so
    /// the config keys come out sorted.
    pub fn write_run<C: Serialize>(&self, command: &str, config: &C) -> CmdResult {
        self.write_json(
            "run.json",
            &RunJson {
                command,
                config: serde_json::to_value(config)?,
                schema_version: spk_core::SCHEMA_VERSION,
                tool: "spk",
                version: spk_core::VERSION,
            },
        )
    }
}

pub fn read_taxonomy(path: &Path) -> CmdResult<Taxonomy> {
    let text = String::from_utf8(corpus::read_file(path)?).map_err(|_| invalid(format!("{}: not UTF-8", path.display())))?;
    parse_taxonomy(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> CmdResult<String> {
    String::from_utf8(corpus::read_file(path)?).map_err(|_| invalid(format!("{}: not UTF-8", path.display())))
}

/// Ids present on both sides, plus the unmatched ones.
pub struct Pairing {
    pub both: Vec<String>,
    pub only_left: Vec<String>,
    pub only_right: Vec<String>,
}

impl Pairing {
    pub fn new(left: &[String], right: &[String]) -> Self {
        let l: BTreeSet<&String> = left.iter().collect();
        let r: BTreeSet<&String> = right.iter().collect();
        Pairing {
            both: l.intersection(&r).map(|s| s.to_string()).collect(),
            only_left: l.difference(&r).map(|s| s.to_string()).collect(),
            only_right: r.difference(&l).map(|s| s.to_string()).collect(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.only_left.is_empty() && self.only_right.is_empty()
    }

    /// `side<TAB>id` lines for every unmatched id.
    pub fn missing_tsv(&self, left: &str, right: &str) -> String {
        let mut out = String::from("missing_from\tid\n");
        for id in &self.only_left {
            let _ = writeln!(out, "{right}\t{id}");
        }
        for id in &self.only_right {
            let _ = writeln!(out, "{left}\t{id}");
        }
        out
    }

    /// Writes `missing_pairs.tsv` and fails under [`Strictness::Abort`] if
    /// anything is unmatched.
    pub fn settle(&self, out: &OutDir, strictness: Strictness, left: &str, right: &str) -> CmdResult {
        out.write("missing_pairs.tsv", self.missing_tsv(left, right).as_bytes())?;
        if self.is_complete() {
            return Ok(());
        }
        let n = self.only_left.len() + self.only_right.len();
        match strictness {
            Strictness::Abort => {
                let sample: Vec<&str> = self.only_left.iter().chain(&self.only_right).take(5).map(String::as_str).collect();
                Err(invalid(format!(
                    "{n} unpaired ids between {left} and {right} (first: {}); listed in missing_pairs.tsv",
                    sample.join(", ")
                )))
            }
            Strictness::Skip => {
                log::warn!("skipping {n} unpaired ids; listed in missing_pairs.tsv");
                Ok(())
            }
        }
    }
}

/// Splits `items` into at most `shards` contiguous runs.
pub fn shards<T>(items: &[T], shards: usize) -> Vec<&[T]> {
    let size = items.len().div_ceil(shards.max(1)).max(1);
    items.chunks(size).collect()
}

/// File stems in `dir` carrying `suffix`, sorted, excluding stems that contain a dot.
pub fn list_stems(dir: &Path, suffix: &str) -> CmdResult<Vec<String>> {
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| crate::fail::Failure::Io(anyhow::Error::new(e).context(dir.display().to_string())))? {
        let entry = entry?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(stem) = name.strip_suffix(suffix) {
            if !stem.is_empty() && !stem.contains('.') {
                ids.push(stem.to_string());
            }
        }
    }
    ids.sort();
    Ok(ids)
}
