use std::collections::BTreeMap;

use serde::Serialize;

use super::MetricsError;
use crate::json::Fixed6;
use crate::maskio::{BinaryMask, LabelMask};
use crate::taxonomy::LabelId;

#[derive(Clone, Debug, PartialEq)]
pub struct PartScore {
    pub correct: u64,
    pub total: u64,
}

impl PartScore {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// Per-part pixel accuracy over the annotated region, plus the macro average.
#[derive(Clone, Debug, PartialEq)]
pub struct PartAccuracy {
    pub per_part: BTreeMap<LabelId, PartScore>,
    pub mean: f64,
}

/// Accuracy rather than IoU, since part annotation is not exhaustive: only
/// pixels flagged in `valid` with a non-void ground-truth part are scored.
/// Returns `None` when no pixel qualifies.
pub fn part_accuracy(gt: &LabelMask, pred: &LabelMask, valid: &BinaryMask) -> Result<Option<PartAccuracy>, MetricsError> {
    if !gt.same_dims(pred) || !gt.same_dims(valid) {
        return Err(MetricsError::Shape {
            gt: gt.dims(),
            pred: if gt.same_dims(pred) { valid.dims() } else { pred.dims() },
        });
    }
    let mut per_part: BTreeMap<LabelId, PartScore> = BTreeMap::new();
    for ((&g, &p), &v) in gt.data().iter().zip(pred.data()).zip(valid.data()) {
        if !v || g.is_void() {
            continue;
        }
        let s = per_part.entry(g).or_insert(PartScore { correct: 0, total: 0 });
        s.total += 1;
        if p == g {
            s.correct += 1;
        }
    }
    if per_part.is_empty() {
        return Ok(None);
    }
    let mean = per_part.values().map(PartScore::accuracy).sum::<f64>() / per_part.len() as f64;
    Ok(Some(PartAccuracy { per_part, mean }))
}

#[derive(Serialize)]
struct PartRowJson {
    accuracy: Fixed6,
    correct: u64,
    part: LabelId,
    total: u64,
}

#[derive(Serialize)]
struct PartAccuracyJson {
    mean_accuracy: Fixed6,
    per_part: Vec<PartRowJson>,
}

impl Serialize for PartAccuracy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PartAccuracyJson {
            mean_accuracy: Fixed6(self.mean),
            per_part: self
                .per_part
                .iter()
                .map(|(&part, s)| PartRowJson {
                    accuracy: Fixed6(s.accuracy()),
                    correct: s.correct,
                    part,
                    total: s.total,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}
