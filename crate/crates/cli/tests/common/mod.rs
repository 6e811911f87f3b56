#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spk_core::maskio::ade20k::encode_packed_pixel;
use spk_core::maskio::{write_ppm, write_scoremap};
use spk_core::{LabelId, RgbImage, ScoreMap};

pub fn spk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spk"))
        .args(args)
        .env_remove("SPK_THREADS")
        .output()
        .expect("spawn spk")
}

pub fn spk_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spk"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn spk")
}

/// Every file under `root`, keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    if root.exists() {
        walk(root, root, &mut out);
    }
    out
}

/// Stream spec used by the cascade fixtures: stuff 1, 2; objects 3, 4;
/// object 3 has parts 5, 6; foreground 9.
pub const CASCADE_SPEC: &str = "stuff\t1,2\nobject\t3,4\nforeground\t9\nparts\t3\t5,6\n";

pub fn random_probs(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> ScoreMap<f32> {
    let mut data = Vec::with_capacity(h * w * c);
    for _ in 0..h * w {
        let raw: Vec<f64> = (0..c).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        data.extend(raw.iter().map(|v| (v / s) as f32));
    }
    ScoreMap::new(h, w, c, data).unwrap()
}

/// Writes `stuff/`, `objects/`, `parts/`, `photos/` and `streams.tsv` under `dir`.
pub fn write_cascade_fixture(dir: &Path, images: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for sub in ["stuff", "objects", "parts", "photos"] {
        fs::create_dir_all(dir.join(sub)).unwrap();
    }
    fs::write(dir.join("streams.tsv"), CASCADE_SPEC).unwrap();
    let (h, w) = (6, 7);
    for i in 0..images {
        let id = format!("im{i:02}");
        fs::write(dir.join(format!("stuff/{id}.scr")), write_scoremap(&random_probs(&mut rng, h, w, 3))).unwrap();
        fs::write(dir.join(format!("objects/{id}.scr")), write_scoremap(&random_probs(&mut rng, h, w, 2))).unwrap();
        fs::write(dir.join(format!("parts/{id}.3.scr")), write_scoremap(&random_probs(&mut rng, h, w, 3))).unwrap();
        let px = (0..h * w).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        fs::write(dir.join(format!("photos/{id}.ppm")), write_ppm(&RgbImage::new(h, w, px).unwrap())).unwrap();
    }
}

/// A two-image release tree in the ADE20K layout (packed PNG labels, JPEG photos, one part level).
pub fn write_ade_tree(root: &Path) {
    let cases = [
        ("training/a/abbey", "ADE_train_00000001", 5u16, 12u16),
        ("validation/b/bedroom", "ADE_val_00000001", 7, 3),
    ];
    for (dir, id, obj, part) in cases {
        let d = root.join(dir);
        fs::create_dir_all(&d).unwrap();
        let (h, w) = (6u32, 8u32);
        let seg = image::RgbImage::from_fn(w, h, |x, y| {
            let px = if x < 4 { encode_packed_pixel(LabelId(obj), 1) } else if y < 3 { encode_packed_pixel(LabelId(2), 2) } else { [0, 0, 0] };
            image::Rgb(px)
        });
        seg.save(d.join(format!("{id}_seg.png"))).unwrap();
        let parts = image::RgbImage::from_fn(w, h, |x, y| {
            image::Rgb(if x < 2 && y < 2 { encode_packed_pixel(LabelId(part), 1) } else { [0, 0, 0] })
        });
        parts.save(d.join(format!("{id}_parts_1.png"))).unwrap();
        image::RgbImage::from_pixel(w, h, image::Rgb([90, 120, 30])).save(d.join(format!("{id}.jpg"))).unwrap();
    }
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}
