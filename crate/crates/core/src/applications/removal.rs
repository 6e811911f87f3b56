use std::collections::BTreeSet;

use super::ApplicationError;
use crate::maskio::{BinaryMask, Grid, ScoreMap};
use crate::taxonomy::LabelId;

pub const DEFAULT_REMOVAL_THRESHOLD: f64 = 0.5;
pub const DEFAULT_DILATION_RADIUS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct RemovalRequest {
    targets: BTreeSet<LabelId>,
    threshold: f64,
    radius: usize,
}

impl RemovalRequest {
    /// `threshold` must lie strictly between 0 and 1.
    pub fn new(targets: impl IntoIterator<Item = LabelId>, threshold: f64, radius: usize) -> Result<Self, ApplicationError> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(ApplicationError::InvalidRequest(format!("threshold {threshold} outside (0, 1)")));
        }
        let targets: BTreeSet<LabelId> = targets.into_iter().collect();
        if targets.is_empty() {
            return Err(ApplicationError::InvalidRequest("no target labels".into()));
        }
        Ok(RemovalRequest {
            targets,
            threshold,
            radius,
        })
    }

    pub fn targets(&self) -> &BTreeSet<LabelId> {
        &self.targets
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn radius(&self) -> usize {
        self.radius
    }
}

/// Pixels where any target's score reaches the threshold, grown by `radius`
/// steps of 8-connected dilation. `channel_labels[k]` names channel `k`.
pub fn removal_mask<T: Copy + Into<f64>>(
    scores: &ScoreMap<T>,
    channel_labels: &[LabelId],
    request: &RemovalRequest,
) -> Result<BinaryMask, ApplicationError> {
    if channel_labels.len() != scores.channels() {
        return Err(ApplicationError::InvalidRequest(format!(
            "{} channel labels for {} channels",
            channel_labels.len(),
            scores.channels()
        )));
    }
    if !scores.is_normalized() {
        return Err(ApplicationError::NotNormalized);
    }
    let mut channels = Vec::new();
    for &t in &request.targets {
        match channel_labels.iter().position(|&l| l == t) {
            Some(k) => channels.push(k),
            None => return Err(ApplicationError::UnknownTarget(t)),
        }
    }
    let seed = (0..scores.pixels())
        .map(|p| {
            let px = scores.pixel(p);
            channels.iter().any(|&k| px[k].into() >= request.threshold)
        })
        .collect();
    let mask = Grid::from_vec(scores.height(), scores.width(), seed).expect("pixel count");
    Ok(dilate(&mask, request.radius))
}

/// `radius` passes of 3x3 (8-connected) binary dilation.
pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (h, w) = mask.dims();
    let mut cur = mask.clone();
    for _ in 0..radius {
        // separable: a 3x3 max is a row max followed by a column max
        let rows = Grid::from_fn(h, w, |r, c| {
            cur.get(r, c) || (c > 0 && cur.get(r, c - 1)) || (c + 1 < w && cur.get(r, c + 1))
        });
        cur = Grid::from_fn(h, w, |r, c| {
            rows.get(r, c) || (r > 0 && rows.get(r - 1, c)) || (r + 1 < h && rows.get(r + 1, c))
        });
    }
    cur
}
