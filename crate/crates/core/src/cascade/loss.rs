use serde::Serialize;

use super::{CascadeError, StreamSpec};
use crate::json::Fixed6;
use crate::maskio::{BinaryMask, Grid, LabelMask, ScoreMap};
use crate::taxonomy::LabelId;

/// Loss value and its gradient with respect to the logits.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossEntropy {
    pub loss: f64,
    pub gradient: ScoreMap<f64>,
    pub unmasked: usize,
}

/// Mean per-pixel softmax cross-entropy over pixels not flagged in `ignore`.
///
/// `targets` holds a channel index per pixel (the raw `u16` of each entry); it
/// is only read on unmasked pixels. The gradient is `(softmax - onehot) / N` on
/// unmasked pixels and exactly zero elsewhere. With no unmasked pixel the loss
/// and gradient are zero.
pub fn masked_cross_entropy(
    logits: &ScoreMap<f64>,
    targets: &LabelMask,
    ignore: &BinaryMask,
) -> Result<CrossEntropy, CascadeError> {
    let dims = logits.dims();
    if targets.dims() != dims || ignore.dims() != dims {
        return Err(CascadeError::Shape(format!(
            "logits {:?}, targets {:?}, ignore mask {:?}",
            dims,
            targets.dims(),
            ignore.dims()
        )));
    }
    let channels = logits.channels();
    let unmasked = ignore.data().iter().filter(|&&m| !m).count();
    let mut gradient = ScoreMap::zeros(dims.0, dims.1, channels);
    if unmasked == 0 {
        return Ok(CrossEntropy {
            loss: 0.0,
            gradient,
            unmasked,
        });
    }
    let scale = 1.0 / unmasked as f64;
    let mut total = 0.0;
    let grad = gradient.data_mut();
    for p in 0..logits.pixels() {
        if ignore.data()[p] {
            continue;
        }
        let target = targets.data()[p].index();
        if target >= channels {
            return Err(CascadeError::TargetOutOfRange {
                pixel: p,
                target,
                channels,
            });
        }
        let z = logits.pixel(p);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = z.iter().map(|&v| (v - max).exp()).sum();
        let log_sum = sum.ln();
        total += log_sum - (z[target] - max);
        let g = &mut grad[p * channels..(p + 1) * channels];
        for (k, gk) in g.iter_mut().enumerate() {
            let prob = ((z[k] - max) - log_sum).exp();
            let onehot = if k == target { 1.0 } else { 0.0 };
            *gk = (prob - onehot) * scale;
        }
    }
    Ok(CrossEntropy {
        loss: total * scale,
        gradient,
        unmasked,
    })
}

/// Per-stream losses. `total` is the plain sum of the active streams.
#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    pub stuff: f64,
    pub object: f64,
    pub part: Option<f64>,
    pub total: f64,
    pub unmasked_stuff: usize,
    pub unmasked_object: usize,
    pub unmasked_part: Option<usize>,
}

#[derive(Serialize)]
struct LossJson {
    object: Fixed6,
    part: Option<Fixed6>,
    stuff: Fixed6,
    total: Fixed6,
    unmasked_object: usize,
    unmasked_part: Option<usize>,
    unmasked_stuff: usize,
}

impl Serialize for LossReport {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        LossJson {
            part: self.part.map(Fixed6),
            stuff: Fixed6(self.stuff),
            object: Fixed6(self.object),
            total: Fixed6(self.total),
            unmasked_object: self.unmasked_object,
            unmasked_part: self.unmasked_part,
            unmasked_stuff: self.unmasked_stuff,
        }
        .serialize(serializer)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamGradients {
    pub stuff: ScoreMap<f64>,
    pub object: ScoreMap<f64>,
    pub part: Option<ScoreMap<f64>>,
}

/// Part-stream training input: logits over [`StreamSpec::all_parts`] and the
/// part ground truth (void where no part is annotated).
#[derive(Clone, Debug)]
pub struct PartStreamInput<'a> {
    pub logits: &'a ScoreMap<f64>,
    pub gt_parts: &'a LabelMask,
}

#[derive(Clone, Debug)]
pub struct CascadeInputs<'a> {
    /// Scene ground truth in benchmark label ids.
    pub gt: &'a LabelMask,
    pub stuff_logits: &'a ScoreMap<f64>,
    pub object_logits: &'a ScoreMap<f64>,
    pub part: Option<PartStreamInput<'a>>,
}

fn channel_targets(mask: &LabelMask, channel: impl Fn(LabelId) -> Option<usize>) -> (LabelMask, BinaryMask) {
    let mut targets = Vec::with_capacity(mask.len());
    let mut ignore = Vec::with_capacity(mask.len());
    for &id in mask.data() {
        match channel(id) {
            Some(k) => {
                targets.push(LabelId(k as u16));
                ignore.push(false);
            }
            None => {
                targets.push(LabelId(0));
                ignore.push(true);
            }
        }
    }
    let (h, w) = mask.dims();
    (
        Grid::from_vec(h, w, targets).expect("same length"),
        Grid::from_vec(h, w, ignore).expect("same length"),
    )
}

fn check_channels(map: &ScoreMap<f64>, expected: usize, stream: &'static str) -> Result<(), CascadeError> {
    if map.channels() != expected {
        return Err(CascadeError::Channels {
            stream,
            expected,
            found: map.channels(),
        });
    }
    Ok(())
}

/// Cascade training loss: stuff stream over stuff classes plus foreground,
/// object stream restricted to object pixels, optional part stream restricted
/// to annotated part pixels.
pub fn total_loss(inputs: &CascadeInputs<'_>, spec: &StreamSpec) -> Result<(LossReport, StreamGradients), CascadeError> {
    check_channels(inputs.stuff_logits, spec.stuff_channels(), "stuff")?;
    check_channels(inputs.object_logits, spec.object_ids().len(), "object")?;

    let stuff_gt = spec.remap_targets_stuff(inputs.gt);
    let (t, m) = channel_targets(&stuff_gt, |id| spec.stuff_channel(id));
    let stuff = masked_cross_entropy(inputs.stuff_logits, &t, &m)?;

    let (t, m) = channel_targets(inputs.gt, |id| spec.object_channel(id));
    let object = masked_cross_entropy(inputs.object_logits, &t, &m)?;

    let part = match &inputs.part {
        Some(p) => {
            check_channels(p.logits, spec.all_parts().len(), "part")?;
            let (t, m) = channel_targets(p.gt_parts, |id| spec.part_channel(id));
            Some(masked_cross_entropy(p.logits, &t, &m)?)
        }
        None => None,
    };

    let total = stuff.loss + object.loss + part.as_ref().map_or(0.0, |p| p.loss);
    let report = LossReport {
        stuff: stuff.loss,
        object: object.loss,
        part: part.as_ref().map(|p| p.loss),
        total,
        unmasked_stuff: stuff.unmasked,
        unmasked_object: object.unmasked,
        unmasked_part: part.as_ref().map(|p| p.unmasked),
    };
    let grads = StreamGradients {
        stuff: stuff.gradient,
        object: object.gradient,
        part: part.map(|p| p.gradient),
    };
    Ok((report, grads))
}
