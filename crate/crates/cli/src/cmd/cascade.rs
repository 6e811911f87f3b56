use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use spk_core::cascade::{fuse_scene, parse_stream_spec, segment_parts, FusionMode, StreamSpec, DEFAULT_PART_THRESHOLD};
use spk_core::json::Fixed6;
use spk_core::maskio::{corpus, read_scoremap, write_mask};
use spk_core::{LabelId, ScoreMap};

use crate::fail::{invalid, CmdResult, Failure};
use crate::out::{list_stems, read_text, shards, OutDir, Pairing};
use crate::Strictness;

#[derive(Clone, Copy, Debug, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Hard,
    Soft,
}

impl From<Mode> for FusionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Hard => FusionMode::Hard,
            Mode::Soft => FusionMode::Soft,
        }
    }
}

#[derive(Args, Serialize)]
pub struct FuseArgs {
    /// Stuff-stream probabilities (`<id>.scr`, one channel per stuff class then foreground).
    #[arg(long)]
    pub stuff: PathBuf,
    /// Object-stream probabilities (`<id>.scr`); may be omitted when the spec has no objects.
    #[arg(long)]
    pub objects: Option<PathBuf>,
    /// Stream spec TSV.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t)]
    pub strictness: Strictness,
    #[arg(long, default_value_t = 8)]
    pub shards: usize,
}

#[derive(Args, Serialize)]
pub struct PartsArgs {
    /// Object-stream probabilities (`<id>.scr`).
    #[arg(long)]
    pub objects: PathBuf,
    /// Fused scene masks (`<id>.pgm`).
    #[arg(long)]
    pub scene: PathBuf,
    /// Part-stream probabilities, one file per image and object: `<id>.<object id>.scr`.
    #[arg(long)]
    pub parts: PathBuf,
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Minimum winning part probability; below it the pixel gets no part.
    #[arg(long, default_value_t = DEFAULT_PART_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t)]
    pub strictness: Strictness,
    #[arg(long, default_value_t = 8)]
    pub shards: usize,
}

pub(crate) fn read_spec(path: &Path) -> CmdResult<StreamSpec> {
    parse_stream_spec(&read_text(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub(crate) fn read_scores(path: &Path) -> CmdResult<ScoreMap<f32>> {
    read_scoremap(&corpus::read_file(path)?).map_err(|e| Failure::from(e).context(path.display()))
}

#[derive(Serialize)]
struct FuseJson {
    images: usize,
    mode: &'static str,
    schema_version: &'static str,
}

pub fn run_fuse(a: &FuseArgs) -> CmdResult {
    let out = OutDir::create(&a.out)?;
    out.write_run("fuse", a)?;
    let spec = read_spec(&a.spec)?;
    let stuff_ids = list_stems(&a.stuff, ".scr")?;
    let ids = match &a.objects {
        Some(dir) => {
            let pairing = Pairing::new(&stuff_ids, &list_stems(dir, ".scr")?);
            pairing.settle(&out, a.strictness, "stuff", "objects")?;
            pairing.both
        }
        None if spec.object_ids().is_empty() => stuff_ids,
        None => return Err(invalid("--objects is required when the spec lists object classes")),
    };
    let mode = FusionMode::from(a.mode);
    let results: Vec<CmdResult> = shards(&ids, a.shards)
        .par_iter()
        .map(|chunk| {
            for id in chunk.iter() {
                let stuff = read_scores(&a.stuff.join(format!("{id}.scr")))?;
                let objects = a.objects.as_ref().map(|d| read_scores(&d.join(format!("{id}.scr")))).transpose()?;
                let scene = fuse_scene(&stuff, objects.as_ref(), &spec, mode).map_err(|e| Failure::from(e).context(id))?;
                out.write(&format!("{id}.pgm"), &write_mask(&scene))?;
            }
            Ok(())
        })
        .collect();
    results.into_iter().collect::<CmdResult<Vec<()>>>()?;
    out.write_json(
        "fuse.json",
        &FuseJson {
            images: ids.len(),
            mode: mode.as_str(),
            schema_version: spk_core::SCHEMA_VERSION,
        },
    )
}

#[derive(Serialize)]
struct PartsImageJson {
    id: String,
    missing: Vec<LabelId>,
}

#[derive(Serialize)]
struct PartsJson {
    images: Vec<PartsImageJson>,
    schema_version: &'static str,
    threshold: Fixed6,
}

pub fn run_parts(a: &PartsArgs) -> CmdResult {
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(invalid(format!("threshold {} outside [0, 1]", a.threshold)));
    }
    let out = OutDir::create(&a.out)?;
    out.write_run("parts", a)?;
    let spec = read_spec(&a.spec)?;
    let pairing = Pairing::new(&list_stems(&a.objects, ".scr")?, &corpus::list_ids(&a.scene)?);
    pairing.settle(&out, a.strictness, "objects", "scene")?;

    let partial: Vec<CmdResult<Vec<PartsImageJson>>> = shards(&pairing.both, a.shards)
        .par_iter()
        .map(|chunk| {
            let mut rows = Vec::new();
            for id in chunk.iter() {
                let objects = read_scores(&a.objects.join(format!("{id}.scr")))?;
                let scene = corpus::read_mask_file(&a.scene.join(format!("{id}.pgm")))?;
                let mut maps = BTreeMap::new();
                for &obj in spec.parts_by_object().keys() {
                    let path = a.parts.join(format!("{id}.{obj}.scr"));
                    if path.exists() {
                        maps.insert(obj, read_scores(&path)?);
                    }
                }
                let seg = segment_parts(&objects, &scene, &maps, &spec, a.threshold).map_err(|e| Failure::from(e).context(id))?;
                out.write(&format!("{id}.pgm"), &write_mask(&seg.mask))?;
                rows.push(PartsImageJson {
                    id: id.clone(),
                    missing: seg.missing,
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
        "parts.json",
        &PartsJson {
            images,
            schema_version: spk_core::SCHEMA_VERSION,
            threshold: Fixed6(a.threshold),
        },
    )
}
