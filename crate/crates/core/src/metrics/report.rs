use serde::Serialize;

use super::ConfusionMatrix;
use crate::json::{fixed, Fixed6};

#[derive(Clone, Debug, PartialEq)]
pub struct SplitScore {
    pub classes: usize,
    pub mean_accuracy: Option<f64>,
    pub mean_iou: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitReport {
    pub stuff: Option<SplitScore>,
    pub object: Option<SplitScore>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassRow {
    pub class: usize,
    pub name: Option<String>,
    pub gt_pixels: u64,
    pub accuracy: Option<f64>,
    pub iou: Option<f64>,
}

/// Dataset-level scores computed from one confusion matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub pixel_accuracy: Option<f64>,
    pub mean_accuracy: Option<f64>,
    pub mean_iou: Option<f64>,
    pub weighted_iou: Option<f64>,
    pub challenge_score: Option<f64>,
    pub per_class: Vec<ClassRow>,
    pub evaluated_class_count: usize,
    pub total_pixels: u64,
    pub ignored_pixels: u64,
    pub splits: Option<SplitReport>,
}

impl MetricsReport {
    /// `names[i]` labels class `i + 1` when provided.
    pub fn from_matrix(cm: &ConfusionMatrix, names: &[String], splits: Option<SplitReport>) -> Self {
        let per_class = (1..=cm.classes())
            .map(|c| ClassRow {
                class: c,
                name: names.get(c - 1).cloned(),
                gt_pixels: cm.gt_total(c),
                accuracy: cm.class_accuracy(c),
                iou: cm.class_iou(c),
            })
            .collect();
        MetricsReport {
            pixel_accuracy: cm.pixel_accuracy(),
            mean_accuracy: cm.mean_accuracy(),
            mean_iou: cm.mean_iou(),
            weighted_iou: cm.weighted_iou(),
            challenge_score: cm.challenge_score(),
            per_class,
            evaluated_class_count: cm.evaluated_class_count(),
            total_pixels: cm.total(),
            ignored_pixels: cm.ignored(),
            splits,
        }
    }

    pub fn per_class_iou(&self) -> Vec<Option<f64>> {
        self.per_class.iter().map(|r| r.iou).collect()
    }

    pub fn per_class_accuracy(&self) -> Vec<Option<f64>> {
        self.per_class.iter().map(|r| r.accuracy).collect()
    }

    /// Tab-separated per-class table with a header row.
    pub fn per_class_tsv(&self) -> String {
        let mut out = String::from("class\tname\tgt_pixels\taccuracy\tiou\n");
        let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
        for r in &self.per_class {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                r.class,
                r.name.as_deref().unwrap_or(""),
                r.gt_pixels,
                f(r.accuracy),
                f(r.iou)
            ));
        }
        out
    }
}

// Field order below is alphabetical so the emitted keys are sorted.

#[derive(Serialize)]
struct SplitScoreJson {
    classes: usize,
    mean_accuracy: Option<Fixed6>,
    mean_iou: Option<Fixed6>,
}

#[derive(Serialize)]
struct SplitsJson {
    object: Option<SplitScoreJson>,
    stuff: Option<SplitScoreJson>,
}

#[derive(Serialize)]
struct ClassJson<'a> {
    accuracy: Option<Fixed6>,
    class: usize,
    gt_pixels: u64,
    iou: Option<Fixed6>,
    name: Option<&'a str>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    aggregation: &'static str,
    challenge_score: Option<Fixed6>,
    evaluated_class_count: usize,
    ignored_pixels: u64,
    mean_accuracy: Option<Fixed6>,
    mean_iou: Option<Fixed6>,
    per_class: Vec<ClassJson<'a>>,
    pixel_accuracy: Option<Fixed6>,
    schema_version: &'static str,
    splits: Option<SplitsJson>,
    total_pixels: u64,
    weighted_iou: Option<Fixed6>,
}

fn split_json(s: &Option<SplitScore>) -> Option<SplitScoreJson> {
    s.as_ref().map(|s| SplitScoreJson {
        classes: s.classes,
        mean_accuracy: fixed(s.mean_accuracy),
        mean_iou: fixed(s.mean_iou),
    })
}

impl Serialize for MetricsReport {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ReportJson {
            aggregation: "dataset-global",
            challenge_score: fixed(self.challenge_score),
            evaluated_class_count: self.evaluated_class_count,
            ignored_pixels: self.ignored_pixels,
            mean_accuracy: fixed(self.mean_accuracy),
            mean_iou: fixed(self.mean_iou),
            per_class: self
                .per_class
                .iter()
                .map(|r| ClassJson {
                    accuracy: fixed(r.accuracy),
                    class: r.class,
                    gt_pixels: r.gt_pixels,
                    iou: fixed(r.iou),
                    name: r.name.as_deref(),
                })
                .collect(),
            pixel_accuracy: fixed(self.pixel_accuracy),
            schema_version: crate::SCHEMA_VERSION,
            splits: self.splits.as_ref().map(|s| SplitsJson {
                object: split_json(&s.object),
                stuff: split_json(&s.stuff),
            }),
            total_pixels: self.total_pixels,
            weighted_iou: fixed(self.weighted_iou),
        }
        .serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskio::Grid;
    use crate::taxonomy::{LabelId, LabelRemap};

    #[test]
    fn json_has_fixed_keys_and_precision() {
        let gt = Grid::from_vec(2, 2, [1, 1, 2, 2].map(LabelId).to_vec()).unwrap();
        let pred = Grid::from_vec(2, 2, [1, 2, 2, 2].map(LabelId).to_vec()).unwrap();
        let mut cm = ConfusionMatrix::new(2);
        cm.accumulate(&gt, &pred, &LabelRemap::identity(3)).unwrap();
        let report = MetricsReport::from_matrix(&cm, &["a".into(), "b".into()], None);
        let text = serde_json::to_string(&report).unwrap();
        for key in [
            "\"pixel_accuracy\":0.750000",
            "\"mean_accuracy\":0.750000",
            "\"mean_iou\":0.583333",
            "\"weighted_iou\":0.583333",
            "\"challenge_score\":0.666667",
            "\"per_class\":[",
            "\"splits\":null",
        ] {
            assert!(text.contains(key), "{key} missing from {text}");
        }
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(report.per_class_tsv().starts_with("class\tname"));
    }
}
