use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use spk_core::applications::{SceneGenerator, SyntheticSpec};
use spk_core::maskio::{corpus, write_ppm};
use spk_core::taxonomy::write_taxonomy;

use crate::fail::CmdResult;
use crate::out::OutDir;

#[derive(Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub images: usize,
    /// Number of object/stuff labels drawn from the Zipf law.
    #[arg(long, default_value_t = 200)]
    pub vocabulary: usize,
    /// Zipf exponent of the label frequencies.
    #[arg(long, default_value_t = 1.3)]
    pub exponent: f64,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 5)]
    pub min_instances: usize,
    #[arg(long, default_value_t = 20)]
    pub max_instances: usize,
    /// Probability that a label is stuff.
    #[arg(long, default_value_t = 0.3)]
    pub stuff_ratio: f64,
    /// Probability that an object instance carries a part.
    #[arg(long, default_value_t = 0.3)]
    pub part_probability: f64,
    #[arg(long, default_value_t = 10)]
    pub part_classes: usize,
    #[arg(long, default_value_t = 10)]
    pub scenes: usize,
    /// Hypernym groups the labels are attached to.
    #[arg(long, default_value_t = 8)]
    pub groups: usize,
}

impl SynthArgs {
    pub fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            exponent: self.exponent,
            groups: self.groups,
            height: self.height,
            images: self.images,
            max_instances: self.max_instances,
            min_instances: self.min_instances,
            part_classes: self.part_classes,
            part_probability: self.part_probability,
            scenes: self.scenes,
            seed: self.seed,
            stuff_ratio: self.stuff_ratio,
            vocabulary: self.vocabulary,
            width: self.width,
        }
    }
}

/// Writes `annotations/` (corpus layout), `images/<id>.ppm`, `taxonomy.tsv`
/// and `manifest.json`.
pub fn run(a: &SynthArgs) -> CmdResult {
    let spec = a.spec();
    let mut generator = SceneGenerator::new(spec.clone())?;
    let out = OutDir::create(&a.out)?;
    out.write_run("synth", a)?;
    out.write("taxonomy.tsv", write_taxonomy(&generator.taxonomy()).as_bytes())?;
    let annotations = out.path("annotations");
    let mut scenes = Vec::new();
    while let Some(scene) = generator.next_scene() {
        let record = &scene.record;
        corpus::write_record(&annotations, record)?;
        out.write(&format!("images/{}.ppm", record.id), &write_ppm(&scene.image))?;
        scenes.push((record.id.clone(), record.scene.clone().unwrap_or_default()));
    }
    corpus::write_scenes(&annotations, scenes.iter().map(|(i, s)| (i.as_str(), s.as_str())))?;
    out.write("manifest.json", generator.manifest().to_json(&spec)?.as_bytes())?;
    Ok(())
}
