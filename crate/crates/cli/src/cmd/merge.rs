use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use spk_core::maskio::{corpus, write_instances, write_mask};
use spk_core::LabelRemap;

use crate::fail::{invalid, CmdResult};
use crate::out::{read_taxonomy, shards, OutDir};

#[derive(Args, Serialize)]
pub struct MergeArgs {
    /// Label masks (`<id>.pgm`).
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub taxonomy: PathBuf,
    /// Hierarchy levels to emit; level 0 is the roots. Repeat or comma-separate.
    #[arg(long, value_delimiter = ',', required = true)]
    pub level: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub shards: usize,
}

#[derive(Serialize)]
struct MergeJson {
    images: usize,
    levels: Vec<usize>,
    max_depth: usize,
    schema_version: &'static str,
}

pub fn run_merge(a: &MergeArgs) -> CmdResult {
    let out = OutDir::create(&a.out)?;
    out.write_run("merge", a)?;
    let taxonomy = read_taxonomy(&a.taxonomy)?;
    let mut levels = a.level.clone();
    levels.sort_unstable();
    levels.dedup();
    let remaps: Vec<(usize, LabelRemap)> = levels.iter().map(|&l| (l, taxonomy.merge_to_level(l))).collect();
    let ids = corpus::list_ids(&a.annotations)?;
    let results: Vec<CmdResult> = shards(&ids, a.shards)
        .par_iter()
        .map(|chunk| {
            for id in chunk.iter() {
                let mask = corpus::read_mask_file(&a.annotations.join(format!("{id}.pgm")))?;
                for (level, remap) in &remaps {
                    out.write(&format!("level{level}/{id}.pgm"), &write_mask(&remap.apply_mask(&mask)))?;
                }
            }
            Ok(())
        })
        .collect();
    results.into_iter().collect::<CmdResult<Vec<()>>>()?;
    out.write_json(
        "merge.json",
        &MergeJson {
            images: ids.len(),
            levels,
            max_depth: taxonomy.max_depth(),
            schema_version: spk_core::SCHEMA_VERSION,
        },
    )
}

#[derive(Args, Serialize)]
pub struct RescaleArgs {
    /// Corpus directory; masks, instance maps and part levels are all resampled.
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Images whose shorter side exceeds this are shrunk to it; smaller ones are copied.
    #[arg(long, default_value_t = 512)]
    pub min_side: usize,
    #[arg(long, default_value_t = 8)]
    pub shards: usize,
}

#[derive(Serialize)]
struct RescaleRow {
    from: (usize, usize),
    id: String,
    to: (usize, usize),
}

#[derive(Serialize)]
struct RescaleJson {
    images: Vec<RescaleRow>,
    min_side: usize,
    resampling: &'static str,
    schema_version: &'static str,
}

/// Target size keeping the aspect ratio, shorter side `min_side`; never upscales.
pub fn rescaled_dims(h: usize, w: usize, min_side: usize) -> (usize, usize) {
    let short = h.min(w);
    if short <= min_side || short == 0 {
        return (h, w);
    }
    // integer rounding keeps the result independent of float formatting
    let scale = |x: usize| ((x * min_side * 2 + short) / (short * 2)).max(1);
    if h <= w {
        (min_side, scale(w))
    } else {
        (scale(h), min_side)
    }
}

pub fn run_rescale(a: &RescaleArgs) -> CmdResult {
    if a.min_side == 0 {
        return Err(invalid("--min-side must be positive"));
    }
    let out = OutDir::create(&a.out)?;
    out.write_run("rescale", a)?;
    let ids = corpus::list_ids(&a.annotations)?;
    let scenes = corpus::read_scenes(&a.annotations)?;
    let partial: Vec<CmdResult<Vec<RescaleRow>>> = shards(&ids, a.shards)
        .par_iter()
        .map(|chunk| {
            let mut rows = Vec::new();
            for id in chunk.iter() {
                let rec = corpus::read_record(&a.annotations, id, None)?;
                let (h, w) = rec.mask.dims();
                let (nh, nw) = rescaled_dims(h, w, a.min_side);
                out.write(&format!("{id}.pgm"), &write_mask(&rec.mask.resize_nearest(nh, nw)))?;
                out.write(&format!("{id}.inst.pgm"), &write_instances(&rec.instances.resize_nearest(nh, nw)))?;
                for (i, level) in rec.parts.iter().enumerate() {
                    let n = i + 1;
                    out.write(&format!("{id}.part{n}.pgm"), &write_mask(&level.mask.resize_nearest(nh, nw)))?;
                    out.write(
                        &format!("{id}.part{n}.inst.pgm"),
                        &write_instances(&level.instances.resize_nearest(nh, nw)),
                    )?;
                }
                rows.push(RescaleRow {
                    from: (h, w),
                    id: id.clone(),
                    to: (nh, nw),
                });
            }
            Ok(rows)
        })
        .collect();
    let mut images = Vec::new();
    for p in partial {
        images.extend(p?);
    }
    if !scenes.is_empty() {
        corpus::write_scenes(&out.path(""), scenes.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    }
    out.write_json(
        "rescale.json",
        &RescaleJson {
            images,
            min_side: a.min_side,
            resampling: "nearest",
            schema_version: spk_core::SCHEMA_VERSION,
        },
    )
}
