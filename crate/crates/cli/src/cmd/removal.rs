use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use spk_core::applications::{
    inpaint, removal_mask, RemovalRequest, DEFAULT_DILATION_RADIUS, DEFAULT_INPAINT_ITERATIONS, DEFAULT_REMOVAL_THRESHOLD,
};
use spk_core::json::Fixed6;
use spk_core::maskio::{corpus, read_ppm, write_binary, write_ppm};
use spk_core::LabelId;

use super::cascade::{read_scores, read_spec};
use crate::fail::{CmdResult, Failure};
use crate::out::{list_stems, shards, OutDir, Pairing};
use crate::Strictness;

#[derive(Args, Serialize)]
pub struct RemovalArgs {
    /// Object-stream probabilities (`<id>.scr`), channels ordered as the spec's objects.
    #[arg(long)]
    pub scores: PathBuf,
    /// Photos to edit (`<id>.ppm`).
    #[arg(long)]
    pub images: PathBuf,
    /// Stream spec naming the object channels.
    #[arg(long)]
    pub spec: PathBuf,
    /// Object label ids to remove. Repeat or comma-separate.
    #[arg(long, value_delimiter = ',', required = true)]
    pub target: Vec<u16>,
    #[arg(long, default_value_t = DEFAULT_REMOVAL_THRESHOLD)]
    pub threshold: f64,
    /// Dilation steps applied to the thresholded region.
    #[arg(long, default_value_t = DEFAULT_DILATION_RADIUS)]
    pub radius: usize,
    #[arg(long, default_value_t = DEFAULT_INPAINT_ITERATIONS)]
    pub max_sweeps: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub strictness: Strictness,
    #[arg(long, default_value_t = 8)]
    pub shards: usize,
}

#[derive(Serialize)]
struct RemovalRow {
    converged: bool,
    hole_pixels: usize,
    id: String,
    sweeps: usize,
}

#[derive(Serialize)]
struct RemovalJson {
    images: Vec<RemovalRow>,
    radius: usize,
    schema_version: &'static str,
    targets: Vec<LabelId>,
    threshold: Fixed6,
}

pub fn run(a: &RemovalArgs) -> CmdResult {
    let request = RemovalRequest::new(a.target.iter().map(|&t| LabelId(t)), a.threshold, a.radius)?;
    let out = OutDir::create(&a.out)?;
    out.write_run("removal", a)?;
    let spec = read_spec(&a.spec)?;
    let pairing = Pairing::new(&list_stems(&a.scores, ".scr")?, &list_stems(&a.images, ".ppm")?);
    pairing.settle(&out, a.strictness, "scores", "images")?;

    let partial: Vec<CmdResult<Vec<RemovalRow>>> = shards(&pairing.both, a.shards)
        .par_iter()
        .map(|chunk| {
            let mut rows = Vec::new();
            for id in chunk.iter() {
                let scores = read_scores(&a.scores.join(format!("{id}.scr")))?;
                let path = a.images.join(format!("{id}.ppm"));
                let image = read_ppm(&corpus::read_file(&path)?).map_err(|e| Failure::from(e).context(path.display()))?;
                let hole = removal_mask(&scores, spec.object_ids(), &request).map_err(|e| Failure::from(e).context(id))?;
                let filled = inpaint(&image, &hole, a.max_sweeps).map_err(|e| Failure::from(e).context(id))?;
                out.write(&format!("{id}.hole.pgm"), &write_binary(&hole))?;
                out.write(&format!("{id}.ppm"), &write_ppm(&filled.image))?;
                rows.push(RemovalRow {
                    converged: filled.converged,
                    hole_pixels: hole.data().iter().filter(|&&b| b).count(),
                    id: id.clone(),
                    sweeps: filled.sweeps,
                });
            }
            Ok(rows)
        })
        .collect();
    let mut images = Vec::new();
    for p in partial {
        images.extend(p?);
    }
    out.write_json(
        "removal.json",
        &RemovalJson {
            images,
            radius: request.radius(),
            schema_version: spk_core::SCHEMA_VERSION,
            targets: request.targets().iter().copied().collect(),
            threshold: Fixed6(request.threshold()),
        },
    )
}
