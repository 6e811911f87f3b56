use crate::taxonomy::LabelId;

use super::MaskIoError;

/// Tolerance on per-pixel channel sums for a score map to count as normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-5;

/// Row-major `H x W` grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Copy> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Grid {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self, MaskIoError> {
        if data.len() != height * width {
            return Err(MaskIoError::Shape(format!(
                "{}x{} grid needs {} samples, got {}",
                height,
                width,
                height * width,
                data.len()
            )));
        }
        Ok(Grid { height, width, data })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Grid { height, width, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(T) -> U) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().copied().map(f).collect(),
        }
    }

    /// Nearest-neighbor resampling: destination `(r, c)` reads source
    /// `(r * H / h, c * W / w)` with integer floor division.
    pub fn resize_nearest(&self, height: usize, width: usize) -> Grid<T> {
        Grid::from_fn(height, width, |r, c| {
            self.get(r * self.height / height, c * self.width / width)
        })
    }

    pub fn same_dims<U>(&self, other: &Grid<U>) -> bool {
        self.height == other.height && self.width == other.width
    }
}

pub type LabelMask = Grid<LabelId>;
/// Instance index per pixel; 0 means no instance.
pub type InstanceMap = Grid<u16>;
pub type BinaryMask = Grid<bool>;

pub fn ensure_same_dims<A, B>(a: &Grid<A>, b: &Grid<B>, what: &str) -> Result<(), MaskIoError>
where
    A: Copy,
    B: Copy,
{
    if a.same_dims(b) {
        Ok(())
    } else {
        Err(MaskIoError::Shape(format!(
            "{what}: {}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )))
    }
}

/// Checks the pairing rules between a label mask and its instance map:
/// instances sit on non-void pixels and each instance carries one label.
pub fn check_instances(mask: &LabelMask, instances: &InstanceMap) -> Result<(), MaskIoError> {
    ensure_same_dims(mask, instances, "instance map dimensions")?;
    let mut owner = std::collections::HashMap::new();
    for (i, (&label, &inst)) in mask.data().iter().zip(instances.data()).enumerate() {
        if inst == 0 {
            continue;
        }
        if label.is_void() {
            return Err(MaskIoError::Invariant(format!(
                "pixel {i} has instance {inst} but a void label"
            )));
        }
        let prev = *owner.entry(inst).or_insert(label);
        if prev != label {
            return Err(MaskIoError::Invariant(format!(
                "instance {inst} carries labels {prev} and {label}"
            )));
        }
    }
    Ok(())
}

/// Per-pixel channel scores, row-major with the channel index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMap<T = f32> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
    normalized: bool,
}

impl<T: Copy + Into<f64>> ScoreMap<T> {
    /// Builds a map; `normalized` is computed from the data.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<T>) -> Result<Self, MaskIoError> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(MaskIoError::Shape(format!(
                "score map dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(MaskIoError::Shape(format!(
                "{height}x{width}x{channels} score map needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|&v| !v.into().is_finite()) {
            return Err(MaskIoError::NonFinite { index: i });
        }
        let mut map = ScoreMap {
            height,
            width,
            channels,
            data,
            normalized: false,
        };
        map.normalized = map.check_normalized();
        Ok(map)
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Result<Self, MaskIoError> {
        let mut data = Vec::with_capacity(height * width * channels);
        for r in 0..height {
            for c in 0..width {
                for k in 0..channels {
                    data.push(f(r, c, k));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    /// True when every value is non-negative and each pixel's channels sum to 1
    /// within [`NORMALIZATION_TOLERANCE`]. Sums are taken in `f64`.
    pub fn check_normalized(&self) -> bool {
        self.data.chunks_exact(self.channels).all(|px| {
            let mut sum = 0.0f64;
            for &v in px {
                let v: f64 = v.into();
                if v < 0.0 {
                    return false;
                }
                sum += v;
            }
            (sum - 1.0).abs() <= NORMALIZATION_TOLERANCE
        })
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn require_normalized(&self, what: &str) -> Result<(), MaskIoError> {
        if self.normalized {
            Ok(())
        } else {
            Err(MaskIoError::Invariant(format!("{what} must be normalized per pixel")))
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Channel scores of pixel `p` (row-major pixel index).
    #[inline]
    pub fn pixel(&self, p: usize) -> &[T] {
        &self.data[p * self.channels..(p + 1) * self.channels]
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize, channel: usize) -> T {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    pub fn channel(&self, k: usize) -> Grid<T> {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().skip(k).step_by(self.channels).copied().collect(),
        }
    }

    pub fn to_f64(&self) -> ScoreMap<f64> {
        ScoreMap {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| v.into()).collect(),
            normalized: self.normalized,
        }
    }
}

impl ScoreMap<f64> {
    pub fn to_f32(&self) -> ScoreMap<f32> {
        let mut out = ScoreMap {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| v as f32).collect(),
            normalized: false,
        };
        out.normalized = out.check_normalized();
        out
    }

    /// Replaces each pixel's channels by their softmax (max-subtracted).
    pub fn softmax(&self) -> ScoreMap<f64> {
        let mut data = Vec::with_capacity(self.data.len());
        for px in self.data.chunks_exact(self.channels) {
            let max = px.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = px.iter().map(|&v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            data.extend(exps.iter().map(|e| e / sum));
        }
        let mut out = ScoreMap {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data,
            normalized: false,
        };
        out.normalized = out.check_normalized();
        out
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn zeros(height: usize, width: usize, channels: usize) -> Self {
        ScoreMap {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
            normalized: false,
        }
    }
}

/// 8-bit RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, data: Vec<[u8; 3]>) -> Result<Self, MaskIoError> {
        if data.len() != height * width {
            return Err(MaskIoError::Shape(format!(
                "{height}x{width} image needs {} pixels, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(RgbImage { height, width, data })
    }

    pub fn filled(height: usize, width: usize, rgb: [u8; 3]) -> Self {
        RgbImage {
            height,
            width,
            data: vec![rgb; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.data
    }

    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        self.data[row * self.width + col] = rgb;
    }
}
