use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use spk_core::consistency::{compare, ConsistencyReport, SegmentSet};
use spk_core::maskio::corpus;

use crate::fail::{CmdResult, Failure};
use crate::out::{shards, OutDir, Pairing};
use crate::Strictness;

#[derive(Args, Serialize)]
pub struct ConsistencyArgs {
    /// First annotation of each image (`<id>.pgm`, optional `<id>.inst.pgm`).
    #[arg(long)]
    pub a: PathBuf,
    /// Second annotation with the same file names.
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub strictness: Strictness,
    #[arg(long, default_value_t = 8)]
    pub shards: usize,
}

fn segments(dir: &std::path::Path, id: &str) -> CmdResult<SegmentSet> {
    let record = corpus::read_record(dir, id, None)?;
    Ok(SegmentSet::from_annotation(&record.mask, &record.instances)?)
}

pub fn run(a: &ConsistencyArgs) -> CmdResult {
    let out = OutDir::create(&a.out)?;
    out.write_run("consistency", a)?;
    let pairing = Pairing::new(&corpus::list_ids(&a.a)?, &corpus::list_ids(&a.b)?);
    pairing.settle(&out, a.strictness, "a", "b")?;

    let partial: Vec<CmdResult<ConsistencyReport>> = shards(&pairing.both, a.shards)
        .par_iter()
        .map(|chunk| {
            let mut report = ConsistencyReport::new();
            for id in chunk.iter() {
                let sa = segments(&a.a, id)?;
                let sb = segments(&a.b, id)?;
                report.push(compare(id, &sa, &sb).map_err(|e| Failure::from(e).context(id))?);
            }
            Ok(report)
        })
        .collect();
    let mut report = ConsistencyReport::new();
    for p in partial {
        report.merge(p?);
    }
    out.write_json("consistency.json", &report)?;
    Ok(())
}
