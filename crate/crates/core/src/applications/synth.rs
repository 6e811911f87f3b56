use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ApplicationError;
use crate::datastats::CorpusStats;
use crate::json::Fixed6;
use crate::maskio::{AnnotationRecord, Grid, PartLevel, RgbImage};
use crate::taxonomy::{LabelId, MacroClass, Taxonomy};

/// Side of the placement cells; objects keep a one-pixel margin inside them.
pub const CELL: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyntheticSpec {
    pub exponent: f64,
    pub groups: usize,
    pub height: usize,
    pub images: usize,
    pub max_instances: usize,
    pub min_instances: usize,
    pub part_classes: usize,
    pub part_probability: f64,
    pub scenes: usize,
    pub seed: u64,
    pub stuff_ratio: f64,
    pub vocabulary: usize,
    pub width: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            exponent: 1.3,
            groups: 8,
            height: 64,
            images: 100,
            max_instances: 20,
            min_instances: 5,
            part_classes: 10,
            part_probability: 0.3,
            scenes: 10,
            seed: 0,
            stuff_ratio: 0.3,
            vocabulary: 200,
            width: 64,
        }
    }
}

impl SyntheticSpec {
    pub fn cells(&self) -> usize {
        (self.height / CELL) * (self.width / CELL)
    }

    pub fn validate(&self) -> Result<(), ApplicationError> {
        let bad = |m: String| Err(ApplicationError::InfeasibleSpec(m));
        if self.height < CELL || self.width < CELL {
            return bad(format!("grid {}x{} is smaller than one {CELL}px cell", self.height, self.width));
        }
        if self.vocabulary == 0 || self.scenes == 0 {
            return bad("vocabulary and scene count must be positive".into());
        }
        if self.min_instances == 0 || self.min_instances > self.max_instances {
            return bad(format!("instance range {}..={} is empty", self.min_instances, self.max_instances));
        }
        let room = self.cells().min(self.height);
        if self.max_instances > room {
            return bad(format!(
                "{} instances do not fit: at most {room} ({} cells, {} rows)",
                self.max_instances,
                self.cells(),
                self.height
            ));
        }
        if !(self.exponent.is_finite() && self.exponent >= 0.0) {
            return bad(format!("exponent {} must be finite and non-negative", self.exponent));
        }
        for (name, p) in [("stuff_ratio", self.stuff_ratio), ("part_probability", self.part_probability)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if self.part_probability > 0.0 && self.part_classes == 0 {
            return bad("parts requested with zero part classes".into());
        }
        let total = self.vocabulary + self.part_classes + self.groups;
        if total >= u16::MAX as usize {
            return bad(format!("{total} labels exceed the 16-bit id space"));
        }
        Ok(())
    }
}

/// One generated image with its annotation.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub record: AnnotationRecord,
    pub image: RgbImage,
}

/// Ground truth tallied while drawing, independent of any raster analysis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub instance_counts: BTreeMap<LabelId, u64>,
    pub pixel_counts: BTreeMap<LabelId, u64>,
    pub part_instance_counts: BTreeMap<LabelId, u64>,
    pub part_pixel_counts: BTreeMap<LabelId, u64>,
    pub images: Vec<ManifestImage>,
    pub order_log: Vec<LabelId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestImage {
    pub classes: u64,
    pub id: String,
    pub instances: u64,
    pub part_instances: u64,
    pub scene: String,
}

impl Manifest {
    pub fn total_instances(&self) -> u64 {
        self.instance_counts.values().sum()
    }

    /// Descending instance count, ties by ascending id.
    pub fn ranking(&self) -> Vec<(LabelId, u64)> {
        let mut v: Vec<(LabelId, u64)> = self.instance_counts.iter().map(|(&l, &c)| (l, c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    pub fn instance_histogram(&self) -> BTreeMap<u64, u64> {
        let mut h = BTreeMap::new();
        for r in &self.images {
            *h.entry(r.instances).or_insert(0) += 1;
        }
        h
    }

    pub fn class_histogram(&self) -> BTreeMap<u64, u64> {
        let mut h = BTreeMap::new();
        for r in &self.images {
            *h.entry(r.classes).or_insert(0) += 1;
        }
        h
    }

    /// Every disagreement between the manifest and statistics recomputed from
    /// the generated annotations; empty when the loop closes.
    pub fn diff(&self, stats: &CorpusStats) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |what: &str, equal: bool| {
            if !equal {
                out.push(what.to_string());
            }
        };
        check("instance counts", self.instance_counts == stats.instance_counts);
        check("pixel counts", self.pixel_counts == stats.pixel_counts);
        check("part instance counts", self.part_instance_counts == stats.part_instance_counts);
        check("part pixel counts", self.part_pixel_counts == stats.part_pixel_counts);
        check("ranking", self.ranking() == stats.frequency_ranking());
        let h = stats.histograms();
        check("instances-per-image histogram", self.instance_histogram() == h.instances);
        check("classes-per-image histogram", self.class_histogram() == h.classes);
        check("image count", self.images.len() == stats.images.len());
        let rows_equal = self.images.len() == stats.images.len()
            && self.images.iter().zip(&stats.images).all(|(m, s)| {
                m.id == s.id && m.instances == s.instances && m.classes == s.classes && m.part_instances == s.part_instances
            });
        check("per-image rows", rows_equal);
        check("order log", self.order_log == stats.order_log());
        out
    }
}

#[derive(Serialize)]
struct CountJson {
    instances: u64,
    label: LabelId,
    pixels: u64,
}

#[derive(Serialize)]
struct ManifestJson<'a> {
    classes_per_image: &'a BTreeMap<u64, u64>,
    images: &'a [ManifestImage],
    instances_per_image: &'a BTreeMap<u64, u64>,
    labels: Vec<CountJson>,
    mean_classes_per_image: Fixed6,
    mean_instances_per_image: Fixed6,
    order_log: &'a [LabelId],
    parts: Vec<CountJson>,
    schema_version: &'static str,
    spec: &'a SyntheticSpec,
    total_instances: u64,
}

fn count_rows(instances: &BTreeMap<LabelId, u64>, pixels: &BTreeMap<LabelId, u64>) -> Vec<CountJson> {
    instances
        .iter()
        .map(|(&label, &n)| CountJson {
            instances: n,
            label,
            pixels: pixels.get(&label).copied().unwrap_or(0),
        })
        .collect()
}

impl Manifest {
    pub fn to_json(&self, spec: &SyntheticSpec) -> serde_json::Result<String> {
        let n = self.images.len().max(1) as f64;
        crate::json::to_json(&ManifestJson {
            classes_per_image: &self.class_histogram(),
            images: &self.images,
            instances_per_image: &self.instance_histogram(),
            labels: count_rows(&self.instance_counts, &self.pixel_counts),
            mean_classes_per_image: Fixed6(self.images.iter().map(|r| r.classes).sum::<u64>() as f64 / n),
            mean_instances_per_image: Fixed6(self.images.iter().map(|r| r.instances).sum::<u64>() as f64 / n),
            order_log: &self.order_log,
            parts: count_rows(&self.part_instance_counts, &self.part_pixel_counts),
            schema_version: crate::SCHEMA_VERSION,
            spec,
            total_instances: self.total_instances(),
        })
    }
}

/// Deterministic scene generator; one ChaCha8 stream per seed.
pub struct SceneGenerator {
    spec: SyntheticSpec,
    rng: ChaCha8Rng,
    zipf: WeightedIndex<f64>,
    is_stuff: Vec<bool>,
    part_of: Vec<LabelId>,
    group_of: Vec<Option<LabelId>>,
    next: usize,
    manifest: Manifest,
}

impl SceneGenerator {
    pub fn new(spec: SyntheticSpec) -> Result<Self, ApplicationError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let weights: Vec<f64> = (1..=spec.vocabulary).map(|k| (k as f64).powf(-spec.exponent)).collect();
        let zipf = WeightedIndex::new(&weights).map_err(|e| ApplicationError::InfeasibleSpec(e.to_string()))?;
        let is_stuff: Vec<bool> = (0..spec.vocabulary).map(|_| rng.gen_bool(spec.stuff_ratio)).collect();
        let part_of: Vec<LabelId> = (0..spec.vocabulary)
            .map(|_| {
                if spec.part_classes == 0 {
                    LabelId::VOID
                } else {
                    LabelId((spec.vocabulary + 1 + rng.gen_range(0..spec.part_classes)) as u16)
                }
            })
            .collect();
        let group_base = spec.vocabulary + spec.part_classes;
        let group_of = (0..spec.vocabulary)
            .map(|_| (spec.groups > 0).then(|| LabelId((group_base + 1 + rng.gen_range(0..spec.groups)) as u16)))
            .collect();
        Ok(SceneGenerator {
            spec,
            rng,
            zipf,
            is_stuff,
            part_of,
            group_of,
            next: 0,
            manifest: Manifest::default(),
        })
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn into_manifest(self) -> Manifest {
        self.manifest
    }

    fn label_is_stuff(&self, label: LabelId) -> bool {
        self.is_stuff[label.index() - 1]
    }

    /// Dictionary of the generated corpus: classes `1..=V` named `class_NNN`,
    /// part classes after them, then hypernym groups over the classes.
    pub fn taxonomy(&self) -> Taxonomy {
        let mut t = Taxonomy::new();
        let s = &self.spec;
        for k in 0..s.vocabulary {
            let m = if self.is_stuff[k] { MacroClass::Stuff } else { MacroClass::Object };
            t.intern(&format!("class_{:03}", k + 1), m).expect("fresh name");
        }
        for k in 0..s.part_classes {
            t.intern(&format!("part_{:02}", k + 1), MacroClass::Part).expect("fresh name");
        }
        for k in 0..s.groups {
            t.intern(&format!("group_{:02}", k + 1), MacroClass::Object).expect("fresh name");
        }
        for k in 0..s.vocabulary {
            let id = LabelId((k + 1) as u16);
            if let Some(g) = self.group_of[k] {
                t.set_hypernym(id, g).expect("known ids");
            }
            if !self.is_stuff[k] && s.part_classes > 0 {
                t.add_part_of(self.part_of[k], id).expect("known ids");
            }
        }
        t
    }

    fn image_id(&self, index: usize) -> String {
        let digits = self.spec.images.saturating_sub(1).to_string().len().max(5);
        format!("img_{index:0digits$}")
    }

    pub fn next_scene(&mut self) -> Option<SyntheticScene> {
        if self.next >= self.spec.images {
            return None;
        }
        let index = self.next;
        self.next += 1;
        let (h, w) = (self.spec.height, self.spec.width);
        let id = self.image_id(index);
        let scene = format!("scene_{:02}", self.rng.gen_range(0..self.spec.scenes));
        let n = self.rng.gen_range(self.spec.min_instances..=self.spec.max_instances);
        let labels: Vec<LabelId> = (0..n).map(|_| LabelId((self.zipf.sample(&mut self.rng) + 1) as u16)).collect();

        let mut mask = Grid::filled(h, w, LabelId::VOID);
        let mut inst = Grid::filled(h, w, 0u16);
        let mut part_mask = Grid::filled(h, w, LabelId::VOID);
        let mut part_inst = Grid::filled(h, w, 0u16);

        // stuff instances become full-width horizontal bands, top to bottom
        let bands: Vec<usize> = (0..n).filter(|&i| self.label_is_stuff(labels[i])).collect();
        let mut band_rows = vec![0u64; n];
        for (k, &i) in bands.iter().enumerate() {
            let (r0, r1) = (k * h / bands.len(), (k + 1) * h / bands.len());
            band_rows[i] = (r1 - r0) as u64;
            for r in r0..r1 {
                for c in 0..w {
                    mask.set(r, c, labels[i]);
                    inst.set(r, c, (i + 1) as u16);
                }
            }
        }

        // objects occupy distinct cells and never touch a cell border
        let mut cells: Vec<usize> = (0..self.spec.cells()).collect();
        cells.shuffle(&mut self.rng);
        let cells_per_row = w / CELL;
        let mut pixels = vec![0u64; n];
        let mut covered = vec![0u64; n];
        let mut part_count = 0u16;
        let mut next_cell = cells.into_iter();
        let objects: Vec<usize> = (0..n).filter(|&i| !self.label_is_stuff(labels[i])).collect();
        for i in objects {
            let cell = next_cell.next().expect("validated capacity");
            let (cr, cc) = ((cell / cells_per_row) * CELL, (cell % cells_per_row) * CELL);
            let sh = self.rng.gen_range(2..=CELL - 2);
            let sw = self.rng.gen_range(2..=CELL - 2);
            let r0 = cr + 1 + self.rng.gen_range(0..=CELL - 2 - sh);
            let c0 = cc + 1 + self.rng.gen_range(0..=CELL - 2 - sw);
            let ellipse = self.rng.gen_bool(0.5);
            let with_part = self.spec.part_classes > 0 && self.rng.gen_bool(self.spec.part_probability);
            let part_label = self.part_of[labels[i].index() - 1];
            let (cy, cx) = (r0 as f64 + sh as f64 / 2.0, c0 as f64 + sw as f64 / 2.0);
            let (ry, rx) = (sh as f64 / 2.0, sw as f64 / 2.0);
            let part_rows = r0 + sh.div_ceil(2);
            if with_part {
                part_count += 1;
            }
            for r in r0..r0 + sh {
                for c in c0..c0 + sw {
                    let inside = !ellipse || {
                        let (dy, dx) = ((r as f64 + 0.5 - cy) / ry, (c as f64 + 0.5 - cx) / rx);
                        dy * dy + dx * dx <= 1.0
                    };
                    if !inside {
                        continue;
                    }
                    let under = inst.get(r, c);
                    if under != 0 {
                        covered[under as usize - 1] += 1;
                    }
                    mask.set(r, c, labels[i]);
                    inst.set(r, c, (i + 1) as u16);
                    pixels[i] += 1;
                    if with_part && r < part_rows {
                        part_mask.set(r, c, part_label);
                        part_inst.set(r, c, part_count);
                        *self.manifest.part_pixel_counts.entry(part_label).or_insert(0) += 1;
                    }
                }
            }
            if with_part {
                *self.manifest.part_instance_counts.entry(part_label).or_insert(0) += 1;
            }
        }
        for &i in &bands {
            pixels[i] = band_rows[i] * w as u64 - covered[i];
        }

        for (i, &label) in labels.iter().enumerate() {
            *self.manifest.instance_counts.entry(label).or_insert(0) += 1;
            *self.manifest.pixel_counts.entry(label).or_insert(0) += pixels[i];
        }
        self.manifest.order_log.extend_from_slice(&labels);
        let classes = labels.iter().collect::<BTreeSet<_>>().len() as u64;
        self.manifest.images.push(ManifestImage {
            classes,
            id: id.clone(),
            instances: n as u64,
            part_instances: u64::from(part_count),
            scene: scene.clone(),
        });

        let image = render(&mask, &part_mask);
        let parts = if part_count > 0 {
            vec![PartLevel {
                mask: part_mask,
                instances: part_inst,
            }]
        } else {
            Vec::new()
        };
        Some(SyntheticScene {
            record: AnnotationRecord {
                id,
                scene: Some(scene),
                mask,
                instances: inst,
                parts,
            },
            image,
        })
    }
}

impl Iterator for SceneGenerator {
    type Item = SyntheticScene;

    fn next(&mut self) -> Option<SyntheticScene> {
        self.next_scene()
    }
}

/// Flat colour per label; part pixels are darkened.
fn render(mask: &Grid<LabelId>, parts: &Grid<LabelId>) -> RgbImage {
    let (h, w) = mask.dims();
    let data = mask
        .data()
        .iter()
        .zip(parts.data())
        .map(|(&l, &p)| {
            if l.is_void() {
                return [0, 0, 0];
            }
            let v = u32::from(l.0);
            let rgb = [(v * 37 + 50) % 256, (v * 91 + 20) % 256, (v * 151 + 90) % 256].map(|x| x as u8);
            if p.is_void() {
                rgb
            } else {
                rgb.map(|x| x / 2)
            }
        })
        .collect();
    RgbImage::new(h, w, data).expect("pixel count")
}

/// Runs the generator to completion.
pub fn synth_generate(spec: &SyntheticSpec) -> Result<(Vec<SyntheticScene>, Manifest, Taxonomy), ApplicationError> {
    let mut g = SceneGenerator::new(spec.clone())?;
    let taxonomy = g.taxonomy();
    let scenes: Vec<SyntheticScene> = g.by_ref().collect();
    Ok((scenes, g.into_manifest(), taxonomy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastats::growth_curves;
    use crate::maskio::check_instances;

    fn small(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            images: 40,
            seed,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn closed_loop_manifest_matches_stats() {
        let (scenes, manifest, taxonomy) = synth_generate(&small(3)).unwrap();
        for s in &scenes {
            check_instances(&s.record.mask, &s.record.instances).unwrap();
        }
        let stats = CorpusStats::from_records(scenes.iter().map(|s| &s.record)).unwrap();
        assert_eq!(manifest.diff(&stats), Vec::<String>::new());
        assert!(taxonomy.validate().is_valid());
        let ids: Vec<&str> = scenes.iter().map(|s| s.record.id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let (a, ma, _) = synth_generate(&small(9)).unwrap();
        let (b, mb, _) = synth_generate(&small(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ma, mb);
        let (c, _, _) = synth_generate(&small(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_class_vocabulary() {
        let spec = SyntheticSpec {
            vocabulary: 1,
            images: 10,
            ..SyntheticSpec::default()
        };
        let (_, manifest, _) = synth_generate(&spec).unwrap();
        assert_eq!(manifest.instance_counts.len(), 1);
        let g = growth_curves(&manifest.order_log, 1000);
        assert_eq!(*g.classes.last().unwrap(), 1);
    }

    #[test]
    fn fixed_instance_count_gives_degenerate_histogram() {
        let spec = SyntheticSpec {
            min_instances: 7,
            max_instances: 7,
            images: 15,
            ..SyntheticSpec::default()
        };
        let (scenes, manifest, _) = synth_generate(&spec).unwrap();
        let stats = CorpusStats::from_records(scenes.iter().map(|s| &s.record)).unwrap();
        assert_eq!(stats.histograms().instances, BTreeMap::from([(7, 15)]));
        assert_eq!(manifest.instance_histogram(), BTreeMap::from([(7, 15)]));
    }

    #[test]
    fn infeasible_specs() {
        let too_many = SyntheticSpec {
            height: 16,
            width: 16,
            max_instances: 5,
            ..SyntheticSpec::default()
        };
        assert!(matches!(too_many.validate(), Err(ApplicationError::InfeasibleSpec(_))));
        let tiny = SyntheticSpec {
            height: 4,
            ..SyntheticSpec::default()
        };
        assert!(tiny.validate().is_err());
        let empty_range = SyntheticSpec {
            min_instances: 9,
            max_instances: 3,
            ..SyntheticSpec::default()
        };
        assert!(empty_range.validate().is_err());
    }
}
