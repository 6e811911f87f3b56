//! Confusion-matrix accumulation and the four scene-parsing metrics.
//!
//! Counts are exact `u64`s; every ratio is formed only when a metric is read.
//! Ground-truth pixels whose class maps to void are skipped and tallied in
//! `ignored`. A prediction that maps to void on a non-void ground-truth pixel
//! goes to a dedicated reject column: it counts against accuracy and IoU of the
//! ground-truth class without crediting any predicted class.

mod parts;
mod report;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::maskio::LabelMask;
use crate::taxonomy::{LabelId, LabelRemap};

pub use parts::{part_accuracy, PartAccuracy, PartScore};
pub use report::{ClassRow, MetricsReport, SplitReport, SplitScore};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("dimension mismatch: ground truth {gt:?} vs prediction {pred:?}")]
    Shape {
        gt: (usize, usize),
        pred: (usize, usize),
    },
    #[error("class map sent label {label} to {mapped}, outside 1..={classes}")]
    ClassOutOfRange {
        label: LabelId,
        mapped: LabelId,
        classes: usize,
    },
    #[error("confusion matrices disagree on class count ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("invalid stuff/object partition: {0}")]
    Partition(String),
}

/// `C x C` pixel counts plus a reject column; `counts[g][p]` holds pixels of
/// ground-truth class `g + 1` predicted as class `p + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
    ignored: u64,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            classes,
            counts: vec![0; classes * (classes + 1)],
            ignored: 0,
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn ignored(&self) -> u64 {
        self.ignored
    }

    #[inline]
    fn stride(&self) -> usize {
        self.classes + 1
    }

    /// Pixels with ground truth `gt` predicted as `pred` (both 1-based classes).
    pub fn count(&self, gt: usize, pred: usize) -> u64 {
        self.counts[(gt - 1) * self.stride() + (pred - 1)]
    }

    /// Pixels of ground-truth class `gt` whose prediction fell outside the benchmark.
    pub fn rejected(&self, gt: usize) -> u64 {
        self.counts[(gt - 1) * self.stride() + self.classes]
    }

    /// Records one pixel given class indices (`0` = void).
    #[inline]
    pub fn add_pixel(&mut self, gt: usize, pred: usize) {
        if gt == 0 {
            self.ignored += 1;
            return;
        }
        let col = if pred == 0 { self.classes } else { pred - 1 };
        let idx = (gt - 1) * self.stride() + col;
        self.counts[idx] += 1;
    }

    /// Adds every pixel of a (ground truth, prediction) pair after mapping both
    /// through `class_map` into `0..=C`.
    pub fn accumulate(&mut self, gt: &LabelMask, pred: &LabelMask, class_map: &LabelRemap) -> Result<(), MetricsError> {
        if !gt.same_dims(pred) {
            return Err(MetricsError::Shape {
                gt: gt.dims(),
                pred: pred.dims(),
            });
        }
        let check = |label: LabelId| {
            let mapped = class_map.apply(label);
            if mapped.index() > self.classes {
                Err(MetricsError::ClassOutOfRange {
                    label,
                    mapped,
                    classes: self.classes,
                })
            } else {
                Ok(mapped.index())
            }
        };
        let mut local = ConfusionMatrix::new(self.classes);
        for (&g, &p) in gt.data().iter().zip(pred.data()) {
            local.add_pixel(check(g)?, check(p)?);
        }
        self.merge(&local)
    }

    /// Element-wise sum.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<(), MetricsError> {
        if self.classes != other.classes {
            return Err(MetricsError::SizeMismatch(self.classes, other.classes));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.ignored += other.ignored;
        Ok(())
    }

    /// Non-ignored pixels, reject column included.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (1..=self.classes).map(|c| self.count(c, c)).sum()
    }

    /// `t_i`: ground-truth pixels of class `i`.
    pub fn gt_total(&self, class: usize) -> u64 {
        let row = (class - 1) * self.stride();
        self.counts[row..row + self.stride()].iter().sum()
    }

    /// `p_i`: pixels predicted as class `i` on non-void ground truth.
    pub fn pred_total(&self, class: usize) -> u64 {
        (1..=self.classes).map(|g| self.count(g, class)).sum()
    }

    pub fn class_accuracy(&self, class: usize) -> Option<f64> {
        let t = self.gt_total(class);
        (t > 0).then(|| self.count(class, class) as f64 / t as f64)
    }

    pub fn class_iou(&self, class: usize) -> Option<f64> {
        let n = self.count(class, class);
        let union = self.gt_total(class) + self.pred_total(class) - n;
        (union > 0).then(|| n as f64 / union as f64)
    }

    pub fn pixel_accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.correct() as f64 / total as f64)
    }

    /// Mean of per-class accuracy over classes present in the ground truth.
    pub fn mean_accuracy(&self) -> Option<f64> {
        mean((1..=self.classes).filter_map(|c| self.class_accuracy(c)))
    }

    /// Mean of per-class IoU over classes present in ground truth or prediction.
    pub fn mean_iou(&self) -> Option<f64> {
        mean((1..=self.classes).filter_map(|c| self.class_iou(c)))
    }

    /// IoU weighted by each class's share of ground-truth pixels.
    pub fn weighted_iou(&self) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let sum = (1..=self.classes)
            .filter_map(|c| {
                let t = self.gt_total(c);
                if t == 0 {
                    return None;
                }
                self.class_iou(c).map(|iou| t as f64 / total as f64 * iou)
            })
            .sum();
        Some(sum)
    }

    /// Average of pixel accuracy and mean IoU.
    pub fn challenge_score(&self) -> Option<f64> {
        Some((self.pixel_accuracy()? + self.mean_iou()?) / 2.0)
    }

    /// Classes with at least one ground-truth pixel.
    pub fn evaluated_class_count(&self) -> usize {
        (1..=self.classes).filter(|&c| self.gt_total(c) > 0).count()
    }

    /// Per-partition mean accuracy and mean IoU. `stuff` and `objects` must
    /// partition `1..=C`.
    pub fn split_report(&self, stuff: &BTreeSet<usize>, objects: &BTreeSet<usize>) -> Result<SplitReport, MetricsError> {
        if let Some(c) = stuff.intersection(objects).next() {
            return Err(MetricsError::Partition(format!("class {c} is in both sets")));
        }
        if let Some(c) = stuff.iter().chain(objects).find(|&&c| c == 0 || c > self.classes) {
            return Err(MetricsError::Partition(format!("class {c} is outside 1..={}", self.classes)));
        }
        if let Some(c) = (1..=self.classes).find(|c| !stuff.contains(c) && !objects.contains(c)) {
            return Err(MetricsError::Partition(format!("class {c} is in neither set")));
        }
        let score = |set: &BTreeSet<usize>| {
            (!set.is_empty()).then(|| SplitScore {
                classes: set.len(),
                mean_accuracy: mean(set.iter().filter_map(|&c| self.class_accuracy(c))),
                mean_iou: mean(set.iter().filter_map(|&c| self.class_iou(c))),
            })
        };
        Ok(SplitReport {
            stuff: score(stuff),
            object: score(objects),
        })
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}
