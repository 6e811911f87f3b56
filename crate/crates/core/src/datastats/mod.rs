//! Corpus statistics: frequency rankings, per-image histograms, mode
//! segmentation, vocabulary growth and dataset summary rows.
//!
//! An instance is a non-void `(label, instance id)` group of one annotation
//! level; instance id 0 groups all of a label's unlabelled-instance pixels.
//! Every counter is a sum or a set union, so [`CorpusStats::merge`] of shard
//! results equals the single-pass result.

mod growth;
mod mode;
mod zipf;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::json::Fixed6;
use crate::maskio::{AnnotationRecord, InstanceMap, LabelMask};
use crate::taxonomy::LabelId;

pub use growth::{growth_curves, GrowthCurves, GROWTH_WINDOW};
pub use mode::{mode_accuracy, ModeAccumulator, MODE_GRID};
pub use zipf::{zipf_fit, zipf_fit_real, ZipfFit, ZIPF_COUNT_FLOOR, ZIPF_MIN_RANKS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("only {found} ranks reach the count floor {floor}; need at least {needed}")]
    InsufficientRanks { found: usize, floor: u64, needed: usize },
    #[error("image {0} appears twice")]
    DuplicateImage(String),
    #[error("dimension mismatch in image {0}")]
    Shape(String),
}

/// Per-image counts; `labels` lists the image's whole-object instances in
/// ascending `(instance id, label)` order, instance ids being assigned in
/// annotation order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageCounts {
    pub id: String,
    pub instances: u64,
    pub classes: u64,
    pub part_instances: u64,
    pub labels: Vec<LabelId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub instance_counts: BTreeMap<LabelId, u64>,
    pub pixel_counts: BTreeMap<LabelId, u64>,
    pub part_instance_counts: BTreeMap<LabelId, u64>,
    pub part_pixel_counts: BTreeMap<LabelId, u64>,
    /// Scene categories each whole-object label occurs in.
    pub label_scenes: BTreeMap<LabelId, BTreeSet<String>>,
    pub scenes: BTreeSet<String>,
    /// Object classes each part class attaches to.
    pub part_parents: BTreeMap<LabelId, BTreeSet<LabelId>>,
    /// Sorted by image id.
    pub images: Vec<ImageCounts>,
}

/// Non-void `(label, instance)` groups with their pixel sets, in ascending key order.
fn groups(mask: &LabelMask, instances: &InstanceMap) -> BTreeMap<(LabelId, u16), Vec<usize>> {
    let mut out: BTreeMap<(LabelId, u16), Vec<usize>> = BTreeMap::new();
    for (p, (&l, &i)) in mask.data().iter().zip(instances.data()).enumerate() {
        if !l.is_void() {
            out.entry((l, i)).or_default().push(p);
        }
    }
    out
}

impl CorpusStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a AnnotationRecord>) -> Result<Self, StatsError> {
        let mut stats = CorpusStats::new();
        for r in records {
            stats.add_record(r)?;
        }
        Ok(stats)
    }

    pub fn add_record(&mut self, record: &AnnotationRecord) -> Result<(), StatsError> {
        if self.images.binary_search_by(|r| r.id.as_str().cmp(&record.id)).is_ok() {
            return Err(StatsError::DuplicateImage(record.id.clone()));
        }
        if !record.mask.same_dims(&record.instances)
            || record
                .parts
                .iter()
                .any(|l| !l.mask.same_dims(&record.mask) || !l.instances.same_dims(&record.mask))
        {
            return Err(StatsError::Shape(record.id.clone()));
        }
        let objects = groups(&record.mask, &record.instances);
        let mut classes = BTreeSet::new();
        let mut order = Vec::with_capacity(objects.len());
        for (&(label, instance), pixels) in &objects {
            *self.instance_counts.entry(label).or_insert(0) += 1;
            *self.pixel_counts.entry(label).or_insert(0) += pixels.len() as u64;
            classes.insert(label);
            order.push((instance, label));
        }
        order.sort_unstable();
        let labels = order.into_iter().map(|(_, l)| l).collect();
        if let Some(scene) = &record.scene {
            self.scenes.insert(scene.clone());
            for &label in &classes {
                self.label_scenes.entry(label).or_default().insert(scene.clone());
            }
        }
        let mut part_instances = 0;
        for (level, part) in record.parts.iter().enumerate() {
            let parent_mask = if level == 0 { &record.mask } else { &record.parts[level - 1].mask };
            for (&(label, _), pixels) in &groups(&part.mask, &part.instances) {
                part_instances += 1;
                *self.part_instance_counts.entry(label).or_insert(0) += 1;
                *self.part_pixel_counts.entry(label).or_insert(0) += pixels.len() as u64;
                let parents = self.part_parents.entry(label).or_default();
                parents.extend(pixels.iter().map(|&p| parent_mask.data()[p]).filter(|l| !l.is_void()));
            }
        }
        let row = ImageCounts {
            id: record.id.clone(),
            instances: objects.len() as u64,
            classes: classes.len() as u64,
            part_instances,
            labels,
        };
        let at = self.images.partition_point(|r| r.id < row.id);
        self.images.insert(at, row);
        Ok(())
    }

    pub fn merge(&mut self, other: CorpusStats) -> Result<(), StatsError> {
        fn add(into: &mut BTreeMap<LabelId, u64>, from: BTreeMap<LabelId, u64>) {
            for (k, v) in from {
                *into.entry(k).or_insert(0) += v;
            }
        }
        fn union<K: Ord, V: Ord>(into: &mut BTreeMap<K, BTreeSet<V>>, from: BTreeMap<K, BTreeSet<V>>) {
            for (k, v) in from {
                into.entry(k).or_default().extend(v);
            }
        }
        for row in other.images {
            match self.images.binary_search_by(|r| r.id.cmp(&row.id)) {
                Ok(_) => return Err(StatsError::DuplicateImage(row.id)),
                Err(at) => self.images.insert(at, row),
            }
        }
        add(&mut self.instance_counts, other.instance_counts);
        add(&mut self.pixel_counts, other.pixel_counts);
        add(&mut self.part_instance_counts, other.part_instance_counts);
        add(&mut self.part_pixel_counts, other.part_pixel_counts);
        union(&mut self.label_scenes, other.label_scenes);
        union(&mut self.part_parents, other.part_parents);
        self.scenes.extend(other.scenes);
        Ok(())
    }

    pub fn image_count(&self) -> usize {
        self.images.len()
    }

    pub fn total_instances(&self) -> u64 {
        self.instance_counts.values().sum()
    }

    /// Whole-object labels by descending instance count, ties by ascending id.
    pub fn frequency_ranking(&self) -> Vec<(LabelId, u64)> {
        rank(&self.instance_counts)
    }

    pub fn part_frequency_ranking(&self) -> Vec<(LabelId, u64)> {
        rank(&self.part_instance_counts)
    }

    pub fn histograms(&self) -> ImageHistograms {
        let mut instances = BTreeMap::new();
        let mut classes = BTreeMap::new();
        for r in &self.images {
            *instances.entry(r.instances).or_insert(0) += 1;
            *classes.entry(r.classes).or_insert(0) += 1;
        }
        let n = self.images.len();
        let mean = |f: fn(&ImageCounts) -> u64| {
            (n > 0).then(|| self.images.iter().map(f).sum::<u64>() as f64 / n as f64)
        };
        ImageHistograms {
            instances,
            classes,
            mean_instances: mean(|r| r.instances),
            mean_classes: mean(|r| r.classes),
            min_instances: self.images.iter().map(|r| r.instances).min(),
            max_instances: self.images.iter().map(|r| r.instances).max(),
        }
    }

    /// Number of scene categories each label occurs in.
    pub fn scene_spread(&self) -> BTreeMap<LabelId, usize> {
        self.label_scenes.iter().map(|(&l, s)| (l, s.len())).collect()
    }

    /// Number of object classes each part class attaches to.
    pub fn part_spread(&self) -> BTreeMap<LabelId, usize> {
        self.part_parents.iter().map(|(&l, s)| (l, s.len())).collect()
    }

    /// Whole-object instance labels, images in id order.
    pub fn order_log(&self) -> Vec<LabelId> {
        self.images.iter().flat_map(|r| r.labels.iter().copied()).collect()
    }

    pub fn summary(&self, name: &str) -> SummaryRow {
        let h = self.histograms();
        SummaryRow {
            name: name.to_string(),
            images: self.images.len() as u64,
            object_instances: self.total_instances(),
            object_classes: self.instance_counts.len() as u64,
            part_instances: self.part_instance_counts.values().sum(),
            part_classes: self.part_instance_counts.len() as u64,
            classes_per_image: h.mean_classes.unwrap_or(0.0),
        }
    }
}

fn rank(counts: &BTreeMap<LabelId, u64>) -> Vec<(LabelId, u64)> {
    let mut v: Vec<(LabelId, u64)> = counts.iter().filter(|(_, &c)| c > 0).map(|(&l, &c)| (l, c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageHistograms {
    /// Instances per image → number of images.
    pub instances: BTreeMap<u64, u64>,
    /// Distinct classes per image → number of images.
    pub classes: BTreeMap<u64, u64>,
    pub mean_instances: Option<f64>,
    pub mean_classes: Option<f64>,
    pub min_instances: Option<u64>,
    pub max_instances: Option<u64>,
}

/// One dataset row of the cross-dataset comparison table.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub images: u64,
    pub object_instances: u64,
    pub object_classes: u64,
    pub part_instances: u64,
    pub part_classes: u64,
    pub classes_per_image: f64,
}

impl SummaryRow {
    pub const TSV_HEADER: &'static str =
        "dataset\timages\tobject_instances\tobject_classes\tpart_instances\tpart_classes\tclasses_per_image\n";

    pub fn to_tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\n",
            self.name,
            self.images,
            self.object_instances,
            self.object_classes,
            self.part_instances,
            self.part_classes,
            self.classes_per_image
        )
    }
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    classes_per_image: Fixed6,
    images: u64,
    name: &'a str,
    object_classes: u64,
    object_instances: u64,
    part_classes: u64,
    part_instances: u64,
}

impl Serialize for SummaryRow {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SummaryJson {
            classes_per_image: Fixed6(self.classes_per_image),
            images: self.images,
            name: &self.name,
            object_classes: self.object_classes,
            object_instances: self.object_instances,
            part_classes: self.part_classes,
            part_instances: self.part_instances,
        }
        .serialize(serializer)
    }
}

#[derive(Serialize)]
struct HistogramJson<'a> {
    classes_per_image: &'a BTreeMap<u64, u64>,
    instances_per_image: &'a BTreeMap<u64, u64>,
    max_instances: Option<u64>,
    mean_classes: Option<Fixed6>,
    mean_instances: Option<Fixed6>,
    min_instances: Option<u64>,
}

impl Serialize for ImageHistograms {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        HistogramJson {
            classes_per_image: &self.classes,
            instances_per_image: &self.instances,
            max_instances: self.max_instances,
            mean_classes: self.mean_classes.map(Fixed6),
            mean_instances: self.mean_instances.map(Fixed6),
            min_instances: self.min_instances,
        }
        .serialize(serializer)
    }
}

#[derive(Serialize)]
struct LabelRowJson {
    instances: u64,
    label: LabelId,
    pixels: u64,
    rank: usize,
    spread: usize,
}

#[derive(Serialize)]
struct ImageRowJson<'a> {
    classes: u64,
    id: &'a str,
    instances: u64,
    part_instances: u64,
}

#[derive(Serialize)]
struct StatsJson<'a> {
    histograms: ImageHistograms,
    images: Vec<ImageRowJson<'a>>,
    labels: Vec<LabelRowJson>,
    parts: Vec<LabelRowJson>,
    scene_count: usize,
    schema_version: &'static str,
    summary: SummaryRow,
    total_instances: u64,
    zipf: Option<ZipfFit>,
}

fn label_rows(
    ranking: Vec<(LabelId, u64)>,
    pixels: &BTreeMap<LabelId, u64>,
    spread: &BTreeMap<LabelId, usize>,
) -> Vec<LabelRowJson> {
    ranking
        .into_iter()
        .enumerate()
        .map(|(i, (label, instances))| LabelRowJson {
            instances,
            label,
            pixels: pixels.get(&label).copied().unwrap_or(0),
            rank: i + 1,
            spread: spread.get(&label).copied().unwrap_or(0),
        })
        .collect()
}

impl CorpusStats {
    /// Full JSON report. Label rows follow the frequency ranking; `spread`
    /// is the scene spread for objects and the parent-object spread for parts.
    pub fn report_json(&self, name: &str) -> serde_json::Result<String> {
        let ranking = self.frequency_ranking();
        let counts: Vec<u64> = ranking.iter().map(|r| r.1).collect();
        let report = StatsJson {
            histograms: self.histograms(),
            images: self
                .images
                .iter()
                .map(|r| ImageRowJson {
                    classes: r.classes,
                    id: &r.id,
                    instances: r.instances,
                    part_instances: r.part_instances,
                })
                .collect(),
            labels: label_rows(ranking, &self.pixel_counts, &self.scene_spread()),
            parts: label_rows(self.part_frequency_ranking(), &self.part_pixel_counts, &self.part_spread()),
            scene_count: self.scenes.len(),
            schema_version: crate::SCHEMA_VERSION,
            summary: self.summary(name),
            total_instances: self.total_instances(),
            zipf: zipf_fit(&counts, ZIPF_COUNT_FLOOR).ok(),
        };
        crate::json::to_json(&report)
    }

    /// `rank, label, instances, pixels` table for plotting.
    pub fn ranking_tsv(&self) -> String {
        let mut out = String::from("rank\tlabel\tinstances\tpixels\n");
        for (i, (label, n)) in self.frequency_ranking().into_iter().enumerate() {
            let px = self.pixel_counts.get(&label).copied().unwrap_or(0);
            out.push_str(&format!("{}\t{}\t{}\t{}\n", i + 1, label, n, px));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskio::{Grid, PartLevel};

    pub(crate) fn record(id: &str, scene: &str, labels: &[u16], inst: &[u16], w: usize) -> AnnotationRecord {
        let h = labels.len() / w;
        AnnotationRecord {
            id: id.into(),
            scene: Some(scene.into()),
            mask: Grid::from_vec(h, w, labels.iter().map(|&l| LabelId(l)).collect()).unwrap(),
            instances: Grid::from_vec(h, w, inst.to_vec()).unwrap(),
            parts: Vec::new(),
        }
    }

    #[test]
    fn single_image_counts() {
        // wall stuff region plus two chairs: 3 instances of 2 classes
        let r = record("a", "office", &[1, 1, 2, 2, 0, 2], &[0, 0, 1, 1, 0, 2], 3);
        let s = CorpusStats::from_records([&r]).unwrap();
        assert_eq!(s.frequency_ranking(), vec![(LabelId(2), 2), (LabelId(1), 1)]);
        let h = s.histograms();
        assert_eq!(h.mean_instances, Some(3.0));
        assert_eq!(h.mean_classes, Some(2.0));
        assert_eq!(s.pixel_counts[&LabelId(2)], 3);
        assert_eq!(s.order_log(), vec![LabelId(1), LabelId(2), LabelId(2)]);
        let later = record("b", "office", &[5, 4], &[1, 2], 2);
        let s = CorpusStats::from_records([&later]).unwrap();
        assert_eq!(s.order_log(), vec![LabelId(5), LabelId(4)]);
    }

    #[test]
    fn empty_corpus_summary_is_zero() {
        let s = CorpusStats::new().summary("empty");
        assert_eq!(
            (s.images, s.object_instances, s.object_classes, s.part_instances, s.part_classes, s.classes_per_image),
            (0, 0, 0, 0, 0, 0.0)
        );
    }

    #[test]
    fn parts_and_spread() {
        let mut r = record("a", "kitchen", &[3, 3, 4, 4], &[1, 1, 2, 2], 4);
        r.parts.push(PartLevel {
            mask: Grid::from_vec(1, 4, [9, 0, 9, 0].map(LabelId).to_vec()).unwrap(),
            instances: Grid::from_vec(1, 4, vec![1, 0, 2, 0]).unwrap(),
        });
        let r2 = record("b", "bath", &[3, 0, 0, 0], &[1, 0, 0, 0], 4);
        let s = CorpusStats::from_records([&r, &r2]).unwrap();
        assert_eq!(s.part_spread()[&LabelId(9)], 2);
        assert_eq!(s.scene_spread()[&LabelId(3)], 2);
        assert_eq!(s.scene_spread()[&LabelId(4)], 1);
        let row = s.summary("toy");
        assert_eq!((row.part_instances, row.part_classes), (2, 1));
        assert_eq!(row.classes_per_image, 1.5);
        assert!(s.report_json("toy").unwrap().contains("\"scene_count\": 2"));
    }

    #[test]
    fn shard_merge_matches_single_pass_and_rejects_duplicates() {
        let rs = [
            record("c", "x", &[1, 2, 2, 0], &[0, 1, 1, 0], 2),
            record("a", "y", &[1, 1, 1, 1], &[0, 0, 0, 0], 2),
            record("b", "x", &[3, 2, 0, 3], &[1, 2, 0, 4], 2),
        ];
        let whole = CorpusStats::from_records(rs.iter()).unwrap();
        let mut left = CorpusStats::from_records([&rs[2]]).unwrap();
        left.merge(CorpusStats::from_records([&rs[0], &rs[1]]).unwrap()).unwrap();
        assert_eq!(left, whole);
        let dup = CorpusStats::from_records([&rs[0]]).unwrap();
        assert!(left.merge(dup).is_err());
        let total: u64 = whole.images.iter().map(|r| r.instances).sum();
        assert_eq!(total, whole.total_instances());
    }
}
