use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use spk_core::maskio::ade20k::{Ade20kImport, Split};
use spk_core::maskio::corpus;

use crate::fail::CmdResult;
use crate::out::OutDir;
use crate::Strictness;

#[derive(Args, Serialize)]
pub struct ImportArgs {
    /// Release root; `*_seg.png` files are found recursively.
    #[arg(long)]
    pub root: PathBuf,
    /// Receives `training/`, `validation/` and `other/` corpus directories.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub strictness: Strictness,
}

#[derive(Serialize)]
struct ImportJson {
    records: BTreeMap<&'static str, usize>,
    schema_version: &'static str,
    skipped: usize,
}

fn split_dir(split: Split) -> &'static str {
    match split {
        Split::Training => "training",
        Split::Validation => "validation",
        Split::Other => "other",
    }
}

/// Records are decoded one at a time, so memory stays flat on the full release.
pub fn run(a: &ImportArgs) -> CmdResult {
    let out = OutDir::create(&a.out)?;
    out.write_run("import-ade20k", a)?;
    let mut import = Ade20kImport::scan(&a.root, a.strictness.into())?;
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut scenes: BTreeMap<&'static str, Vec<(String, String)>> = BTreeMap::new();
    for rec in import.by_ref() {
        let rec = rec?;
        let dir = split_dir(rec.split);
        corpus::write_record(&out.path(dir), &rec.annotation)?;
        *counts.entry(dir).or_default() += 1;
        if let Some(scene) = &rec.annotation.scene {
            scenes.entry(dir).or_default().push((rec.annotation.id.clone(), scene.clone()));
        }
    }
    for (dir, rows) in &scenes {
        corpus::write_scenes(&out.path(dir), rows.iter().map(|(i, s)| (i.as_str(), s.as_str())))?;
    }
    out.write_json(
        "import.json",
        &ImportJson {
            records: counts,
            schema_version: spk_core::SCHEMA_VERSION,
            skipped: import.skipped(),
        },
    )
}
