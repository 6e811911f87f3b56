use super::ApplicationError;
use crate::maskio::{BinaryMask, RgbImage};

pub const DEFAULT_INPAINT_ITERATIONS: usize = 2000;
/// Largest per-sweep change (intensity levels) at which diffusion stops.
pub const CONVERGENCE_DELTA: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct Inpainted {
    pub image: RgbImage,
    pub sweeps: usize,
    pub converged: bool,
}

fn neighbours(p: usize, h: usize, w: usize) -> impl Iterator<Item = usize> {
    let (r, c) = (p / w, p % w);
    [
        (r > 0).then(|| p - w),
        (r + 1 < h).then(|| p + w),
        (c > 0).then(|| p - 1),
        (c + 1 < w).then(|| p + 1),
    ]
    .into_iter()
    .flatten()
}

/// Fills `hole` by diffusion. Hole pixels are first seeded layer by layer from
/// their already-known 4-neighbours, then relaxed in place (each becomes the
/// mean of its 4-neighbours) until no channel moves by `CONVERGENCE_DELTA` or
/// more, or `max_sweeps` is reached. Pixels outside the hole are copied.
pub fn inpaint(image: &RgbImage, hole: &BinaryMask, max_sweeps: usize) -> Result<Inpainted, ApplicationError> {
    let (h, w) = image.dims();
    if hole.dims() != (h, w) {
        return Err(ApplicationError::Shape(format!("hole {:?} vs image {:?}", hole.dims(), (h, w))));
    }
    let holes: Vec<usize> = (0..h * w).filter(|&p| hole.data()[p]).collect();
    if holes.is_empty() {
        return Ok(Inpainted {
            image: image.clone(),
            sweeps: 0,
            converged: true,
        });
    }
    if holes.len() == h * w {
        return Err(ApplicationError::HoleCoversImage);
    }

    let mut value: Vec<[f64; 3]> = image.pixels().iter().map(|px| px.map(f64::from)).collect();
    let mut known: Vec<bool> = hole.data().iter().map(|&b| !b).collect();
    let mut pending = holes.clone();
    while !pending.is_empty() {
        let mut layer = Vec::new();
        let mut rest = Vec::new();
        for &p in &pending {
            let mut sum = [0.0; 3];
            let mut n = 0.0;
            for q in neighbours(p, h, w).filter(|&q| known[q]) {
                for k in 0..3 {
                    sum[k] += value[q][k];
                }
                n += 1.0;
            }
            if n > 0.0 {
                layer.push((p, sum.map(|s| s / n)));
            } else {
                rest.push(p);
            }
        }
        for &(p, v) in &layer {
            value[p] = v;
            known[p] = true;
        }
        pending = rest;
    }

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut delta: f64 = 0.0;
        for &p in &holes {
            let mut sum = [0.0; 3];
            let mut n = 0.0;
            for q in neighbours(p, h, w) {
                for k in 0..3 {
                    sum[k] += value[q][k];
                }
                n += 1.0;
            }
            for k in 0..3 {
                let v = sum[k] / n;
                delta = delta.max((v - value[p][k]).abs());
                value[p][k] = v;
            }
        }
        if delta < CONVERGENCE_DELTA {
            converged = true;
            break;
        }
    }

    let mut out = image.clone();
    for &p in &holes {
        out.pixels_mut()[p] = value[p].map(|v| v.round().clamp(0.0, 255.0) as u8);
    }
    Ok(Inpainted {
        image: out,
        sweeps,
        converged,
    })
}
