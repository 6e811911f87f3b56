//! Seeded fixtures shared by the kernel benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spk_core::cascade::{parse_stream_spec, StreamSpec};
use spk_core::{BinaryMask, Grid, LabelId, LabelMask, ScoreMap};

/// Three stuff classes, four objects, one part-bearing object.
pub const STREAMS: &str = "stuff\t1,2,3\nobject\t4,5,6,7\nforeground\t9\nparts\t4\t10,11\n";

pub fn streams() -> StreamSpec {
    parse_stream_spec(STREAMS).expect("fixture stream spec parses")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Labels drawn uniformly from `0..=max_label`.
pub fn label_mask(rng: &mut ChaCha8Rng, h: usize, w: usize, max_label: u16) -> LabelMask {
    Grid::from_fn(h, w, |_, _| LabelId(rng.gen_range(0..=max_label)))
}

pub fn ignore_mask(rng: &mut ChaCha8Rng, h: usize, w: usize, p: f64) -> BinaryMask {
    Grid::from_fn(h, w, |_, _| rng.gen_bool(p))
}

pub fn logits(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> ScoreMap<f64> {
    let data = (0..h * w * c).map(|_| rng.gen_range(-4.0..4.0)).collect();
    ScoreMap::new(h, w, c, data).expect("sized to fit")
}

/// Per-pixel distributions over `c` channels.
pub fn probabilities(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> ScoreMap<f32> {
    let mut data = Vec::with_capacity(h * w * c);
    for _ in 0..h * w {
        let raw: Vec<f32> = (0..c).map(|_| rng.gen_range(0.01..1.0)).collect();
        let s: f32 = raw.iter().sum();
        data.extend(raw.into_iter().map(|v| v / s));
    }
    ScoreMap::new(h, w, c, data).expect("sized to fit")
}
